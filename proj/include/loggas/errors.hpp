/**
 * @brief Error taxonomy shared across modules, mapped to CLI exit codes.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace loggas {

/// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Runtime/numerical failure (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Eigenvalue routine non-convergence; retriable, carries the seed.
class EigenFailure : public NumericError {
public:
    EigenFailure(const std::string& what, std::uint64_t seed)
        : NumericError(what + " (seed " + std::to_string(seed) + ")"),
          seed_(seed) {}
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

/// MCMC acceptance collapsed; the chain is not mixing.
class MixingFailure : public NumericError {
public:
    explicit MixingFailure(const std::string& what) : NumericError(what) {}
};

/// Integrator hit a particle collision (pair distance below resolution).
class CollisionError : public NumericError {
public:
    explicit CollisionError(const std::string& what) : NumericError(what) {}
};

/// Filesystem failure (CLI exit code 4).
class IOError : public std::runtime_error {
public:
    explicit IOError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace loggas
