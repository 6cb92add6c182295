#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "nashpde/expr.hpp"
#include "nashpde/grid.hpp"

namespace nashpde {

struct LinearSolveSettings {
    double rel_tolerance = 1e-12;  // on the Euclidean residual vs the right-hand side
    int max_iters = 0;             // 0 means 10 * unknowns

    void validate() const;
};

struct NewtonSettings {
    double abs_tolerance = 1e-11;  // on the L2 norm of the nonlinear residual
    int max_iters = 50;
    int max_halvings = 30;
    LinearSolveSettings linear;

    void validate() const;
};

/// Discrete second-order elliptic operator with constant symmetric
/// positive-definite coefficients on a uniform grid, second-order finite
/// differences, homogeneous Dirichlet boundary. The assembled matrix over
/// interior nodes is exactly symmetric.
class EllipticOperator {
public:
    /// 1D: -(a11 y')'.
    EllipticOperator(const Grid& grid, double a11);
    /// 2D: -div(a grad y) with a = [[a11, a12], [a12, a22]].
    EllipticOperator(const Grid& grid, double a11, double a12, double a22);
    /// Negative Laplacian (identity coefficients).
    explicit EllipticOperator(const Grid& grid);

    const Grid& grid() const;

    /// Smallest eigenvalue of the coefficient matrix (checked > 0 at
    /// construction).
    double coercivity() const;

    /// Nodal application out = A * in over interior nodes.
    std::vector<double> apply(std::span<const double> in) const;

    struct Impl;
    const Impl& impl() const { return *impl_; }

private:
    std::shared_ptr<const Impl> impl_;
};

/// Semilinear state solve: A y + f(x, y) = rhs, by damped Newton with
/// conjugate-gradient inner solves. Requires df/dy >= 0 for the linearized
/// systems to stay positive definite. Newton starts from the zero field
/// unless an initial guess is supplied.
GridFunction solve_state(const EllipticOperator& op, const Expr& f,
                         const GridFunction& rhs,
                         const NewtonSettings& settings = {},
                         const std::optional<GridFunction>& initial_guess = std::nullopt);

/// Linearized solve at a state y: (A + diag(df/dy(x, y))) z = v.
GridFunction solve_linearized(const EllipticOperator& op, const Expr& f,
                              const GridFunction& y, const GridFunction& v,
                              const LinearSolveSettings& settings = {});

/// Second-order term: (A + diag(df/dy)) z = -d2f/dy2(x, y) * z1 * z2.
GridFunction solve_second_order(const EllipticOperator& op, const Expr& f,
                                const GridFunction& y, const GridFunction& z1,
                                const GridFunction& z2,
                                const LinearSolveSettings& settings = {});

/// Adjoint solve at a state y: (A + diag(df/dy)) phi = source. The constant
/// coefficient matrix is symmetric, so the adjoint operator equals A.
GridFunction solve_adjoint(const EllipticOperator& op, const Expr& f,
                           const GridFunction& y, const GridFunction& source,
                           const LinearSolveSettings& settings = {});

}  // namespace nashpde
