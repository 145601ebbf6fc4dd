#pragma once

#include <stdexcept>
#include <string>

namespace tubeplan {

// Stable process exit codes used by the CLI. Library code throws the typed
// errors below; the CLI maps them onto this table.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,          // uncategorized
  kExitGainCondition = 2,    // feedback gain inequality violated
  kExitParse = 3,            // malformed/invalid input file
  kExitEmptyClass = 4,       // a lattice class has no feasible primitive
  kExitStaleLibrary = 5,     // library provenance hash mismatch
  kExitNoPath = 6,           // search exhausted without reaching the goal
  kExitSnap = 7,             // start/goal not on the lattice
  kExitCertification = 8,    // containment/collision certification failed
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GainConditionError : ConfigError {
  explicit GainConditionError(const std::string& msg) : ConfigError(msg) {}
};

struct TighteningError : ConfigError {
  explicit TighteningError(const std::string& msg) : ConfigError(msg) {}
};

struct ModelValidityError : ConfigError {
  explicit ModelValidityError(const std::string& msg) : ConfigError(msg) {}
};

struct SnapError : ConfigError {
  explicit SnapError(const std::string& msg) : ConfigError(msg) {}
};

struct StaleLibraryError : std::runtime_error {
  explicit StaleLibraryError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyClassError : std::runtime_error {
  explicit EmptyClassError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NoPathError : std::runtime_error {
  explicit NoPathError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InfeasiblePrimitiveError : std::runtime_error {
  explicit InfeasiblePrimitiveError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SymmetryError : std::runtime_error {
  explicit SymmetryError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IntegrationError : std::runtime_error {
  explicit IntegrationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tubeplan
