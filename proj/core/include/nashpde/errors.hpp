#pragma once

#include <stdexcept>
#include <string>

namespace nashpde {

/// Shape/metadata violations: mismatched grids, malformed problem data,
/// broken invariants caught at construction time.
class StructuralError : public std::runtime_error {
public:
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

/// Arithmetic failures during expression evaluation (division by zero,
/// non-finite results).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failures. Carries the residual reached when the
/// iteration gave up.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

/// Configuration-file problems: syntax, unknown keys, invariant violations.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nashpde
