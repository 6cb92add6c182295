#include "nashpde/elliptic.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>

#include "nashpde/errors.hpp"

namespace nashpde {

void LinearSolveSettings::validate() const {
    if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0)) {
        throw StructuralError("LinearSolveSettings: rel_tolerance must be in (0, 1)");
    }
    if (max_iters < 0) {
        throw StructuralError("LinearSolveSettings: max_iters must be >= 0");
    }
}

void NewtonSettings::validate() const {
    if (!(abs_tolerance > 0.0)) {
        throw StructuralError("NewtonSettings: abs_tolerance must be > 0");
    }
    if (max_iters < 1) {
        throw StructuralError("NewtonSettings: max_iters must be >= 1");
    }
    linear.validate();
}

struct EllipticOperator::Impl {
    Grid grid;
    double a11 = 1.0, a12 = 0.0, a22 = 1.0;
    double lambda_min = 1.0;
    Eigen::SparseMatrix<double> matrix;  // interior nodes, exactly symmetric
    Eigen::VectorXd diagonal;

    Impl(const Grid& g, double c11, double c12, double c22)
        : grid(g), a11(c11), a12(c12), a22(c22) {
        if (grid.dim() == 1) {
            lambda_min = a11;
        } else {
            const double tr = a11 + a22;
            const double det = a11 * a22 - a12 * a12;
            lambda_min = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
        }
        if (!(lambda_min > 0.0)) {
            throw StructuralError("EllipticOperator: coefficient matrix is not positive definite");
        }
        assemble();
    }

    void assemble() {
        const int n = grid.interior_count();
        std::vector<Eigen::Triplet<double>> trip;
        if (grid.dim() == 1) {
            const double h = grid.spacing(0);
            const double d = 2.0 * a11 / (h * h);
            const double off = -a11 / (h * h);
            trip.reserve(static_cast<std::size_t>(3 * n));
            for (int i = 0; i < n; ++i) {
                trip.emplace_back(i, i, d);
                if (i > 0) trip.emplace_back(i, i - 1, off);
                if (i < n - 1) trip.emplace_back(i, i + 1, off);
            }
        } else {
            const int nx = grid.interior_points(0);
            const int ny = grid.interior_points(1);
            const double hx = grid.spacing(0);
            const double hy = grid.spacing(1);
            const double dx = a11 / (hx * hx);
            const double dy = a22 / (hy * hy);
            const double cross = a12 / (2.0 * hx * hy);
            trip.reserve(static_cast<std::size_t>(9 * n));
            auto idx = [nx](int ix, int iy) { return iy * nx + ix; };
            for (int iy = 0; iy < ny; ++iy) {
                for (int ix = 0; ix < nx; ++ix) {
                    const int row = idx(ix, iy);
                    trip.emplace_back(row, row, 2.0 * dx + 2.0 * dy);
                    if (ix > 0) trip.emplace_back(row, idx(ix - 1, iy), -dx);
                    if (ix < nx - 1) trip.emplace_back(row, idx(ix + 1, iy), -dx);
                    if (iy > 0) trip.emplace_back(row, idx(ix, iy - 1), -dy);
                    if (iy < ny - 1) trip.emplace_back(row, idx(ix, iy + 1), -dy);
                    // mixed derivative, 4-point cross stencil
                    if (cross != 0.0) {
                        if (ix < nx - 1 && iy < ny - 1) trip.emplace_back(row, idx(ix + 1, iy + 1), -cross);
                        if (ix > 0 && iy > 0) trip.emplace_back(row, idx(ix - 1, iy - 1), -cross);
                        if (ix < nx - 1 && iy > 0) trip.emplace_back(row, idx(ix + 1, iy - 1), cross);
                        if (ix > 0 && iy < ny - 1) trip.emplace_back(row, idx(ix - 1, iy + 1), cross);
                    }
                }
            }
        }
        matrix.resize(n, n);
        matrix.setFromTriplets(trip.begin(), trip.end());
        matrix.makeCompressed();
        diagonal = matrix.diagonal();
    }
};

EllipticOperator::EllipticOperator(const Grid& grid, double a11) {
    if (grid.dim() != 1) {
        throw StructuralError("EllipticOperator: 1D constructor used on a 2D grid");
    }
    impl_ = std::make_shared<Impl>(grid, a11, 0.0, a11);
}

EllipticOperator::EllipticOperator(const Grid& grid, double a11, double a12, double a22) {
    if (grid.dim() != 2) {
        throw StructuralError("EllipticOperator: 2D constructor used on a 1D grid");
    }
    impl_ = std::make_shared<Impl>(grid, a11, a12, a22);
}

EllipticOperator::EllipticOperator(const Grid& grid) {
    impl_ = std::make_shared<Impl>(grid, 1.0, 0.0, 1.0);
}

const Grid& EllipticOperator::grid() const { return impl_->grid; }

double EllipticOperator::coercivity() const { return impl_->lambda_min; }

std::vector<double> EllipticOperator::apply(std::span<const double> in) const {
    const int n = impl_->grid.interior_count();
    if (static_cast<int>(in.size()) != n) {
        throw StructuralError("EllipticOperator::apply: size mismatch");
    }
    Eigen::Map<const Eigen::VectorXd> x(in.data(), n);
    Eigen::VectorXd y = impl_->matrix * x;
    return std::vector<double>(y.data(), y.data() + n);
}

namespace {

int effective_max_iters(const LinearSolveSettings& s, int n) {
    return s.max_iters > 0 ? s.max_iters : 10 * n;
}

/// Jacobi-preconditioned CG for (A + diag(shift)) x = b with shift >= 0.
Eigen::VectorXd cg_solve(const EllipticOperator::Impl& op, const Eigen::VectorXd& shift,
                         const Eigen::VectorXd& b, const LinearSolveSettings& settings) {
    settings.validate();
    const int n = static_cast<int>(b.size());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) return x;

    const Eigen::VectorXd inv_diag = (op.diagonal + shift).cwiseInverse();
    auto apply_k = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return op.matrix * v + shift.cwiseProduct(v);
    };

    Eigen::VectorXd r = b;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    const double target = settings.rel_tolerance * bnorm;
    const int max_iters = effective_max_iters(settings, n);

    for (int it = 0; it < max_iters; ++it) {
        if (r.norm() <= target) return x;
        const Eigen::VectorXd kp = apply_k(p);
        const double pkp = p.dot(kp);
        if (!(pkp > 0.0)) {
            throw SolverError("CG breakdown: operator not positive definite on search direction",
                              r.norm() / bnorm);
        }
        const double alpha = rz / pkp;
        x += alpha * p;
        r -= alpha * kp;
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    if (r.norm() <= target) return x;
    throw SolverError("CG did not reach tolerance within max_iters", r.norm() / bnorm);
}

Eigen::VectorXd to_eigen(const GridFunction& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.values().data(),
                                             static_cast<int>(f.values().size()));
}

GridFunction to_grid_function(const Grid& grid, const Eigen::VectorXd& v) {
    return GridFunction(grid, std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd eval_on_nodes(const Expr& e, const Grid& grid, const Eigen::VectorXd& y) {
    const int n = grid.interior_count();
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        const auto x = grid.node(i);
        out[i] = e.eval(x[0], x[1], y[i], 0.0);
    }
    return out;
}

}  // namespace

GridFunction solve_state(const EllipticOperator& op, const Expr& f,
                         const GridFunction& rhs, const NewtonSettings& settings,
                         const std::optional<GridFunction>& initial_guess) {
    settings.validate();
    detail::require_same_grid(op.grid(), rhs.grid(), "solve_state");
    if (f.uses_yd()) {
        throw StructuralError("solve_state: f must not reference yd");
    }
    const Grid& grid = op.grid();
    const int n = grid.interior_count();
    const double sqrt_w = std::sqrt(grid.cell_volume());
    const Expr dfdy = f.diff_y();
    const Eigen::VectorXd b = to_eigen(rhs);

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    if (initial_guess) {
        detail::require_same_grid(op.grid(), initial_guess->grid(), "solve_state");
        y = to_eigen(*initial_guess);
    }
    auto residual_vec = [&](const Eigen::VectorXd& state) -> Eigen::VectorXd {
        return op.impl().matrix * state + eval_on_nodes(f, grid, state) - b;
    };

    Eigen::VectorXd r = residual_vec(y);
    double rnorm = sqrt_w * r.norm();
    for (int it = 0; it < settings.max_iters; ++it) {
        if (rnorm <= settings.abs_tolerance) {
            return to_grid_function(grid, y);
        }
        const Eigen::VectorXd shift = eval_on_nodes(dfdy, grid, y);
        const Eigen::VectorXd delta = cg_solve(op.impl(), shift, -r, settings.linear);

        double step = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= settings.max_halvings; ++halving) {
            const Eigen::VectorXd candidate = y + step * delta;
            const Eigen::VectorXd r_candidate = residual_vec(candidate);
            const double rnorm_candidate = sqrt_w * r_candidate.norm();
            if (rnorm_candidate < rnorm) {
                y = candidate;
                r = r_candidate;
                rnorm = rnorm_candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            throw SolverError("solve_state: Newton backtracking found no decrease", rnorm);
        }
    }
    if (rnorm <= settings.abs_tolerance) {
        return to_grid_function(grid, y);
    }
    throw SolverError("solve_state: Newton iteration limit reached", rnorm);
}

GridFunction solve_linearized(const EllipticOperator& op, const Expr& f,
                              const GridFunction& y, const GridFunction& v,
                              const LinearSolveSettings& settings) {
    detail::require_same_grid(op.grid(), y.grid(), "solve_linearized");
    detail::require_same_grid(op.grid(), v.grid(), "solve_linearized");
    const Eigen::VectorXd ye = to_eigen(y);
    const Eigen::VectorXd shift = eval_on_nodes(f.diff_y(), op.grid(), ye);
    return to_grid_function(op.grid(), cg_solve(op.impl(), shift, to_eigen(v), settings));
}

GridFunction solve_second_order(const EllipticOperator& op, const Expr& f,
                                const GridFunction& y, const GridFunction& z1,
                                const GridFunction& z2,
                                const LinearSolveSettings& settings) {
    detail::require_same_grid(op.grid(), y.grid(), "solve_second_order");
    detail::require_same_grid(op.grid(), z1.grid(), "solve_second_order");
    detail::require_same_grid(op.grid(), z2.grid(), "solve_second_order");
    const Eigen::VectorXd ye = to_eigen(y);
    const Expr dfdy = f.diff_y();
    const Eigen::VectorXd shift = eval_on_nodes(dfdy, op.grid(), ye);
    const Eigen::VectorXd curvature = eval_on_nodes(dfdy.diff_y(), op.grid(), ye);
    const Eigen::VectorXd rhs =
        -curvature.cwiseProduct(to_eigen(z1)).cwiseProduct(to_eigen(z2));
    return to_grid_function(op.grid(), cg_solve(op.impl(), shift, rhs, settings));
}

GridFunction solve_adjoint(const EllipticOperator& op, const Expr& f,
                           const GridFunction& y, const GridFunction& source,
                           const LinearSolveSettings& settings) {
    detail::require_same_grid(op.grid(), y.grid(), "solve_adjoint");
    detail::require_same_grid(op.grid(), source.grid(), "solve_adjoint");
    const Eigen::VectorXd ye = to_eigen(y);
    const Eigen::VectorXd shift = eval_on_nodes(f.diff_y(), op.grid(), ye);
    return to_grid_function(op.grid(), cg_solve(op.impl(), shift, to_eigen(source), settings));
}

}  // namespace nashpde
