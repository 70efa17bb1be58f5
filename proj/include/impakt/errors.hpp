#pragma once

#include <stdexcept>
#include <string>

namespace impakt {

// Error taxonomy mirrored by the CLI exit codes: configuration/parse problems
// exit 2, violated numerical preconditions (CFL, domain, grid alignment)
// exit 3, and numerical-health failures (statistics-invalidating runs) exit 4.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

struct HealthError : std::runtime_error {
    explicit HealthError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace impakt
