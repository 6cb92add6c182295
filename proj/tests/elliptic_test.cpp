#include "nashpde/elliptic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nashpde/errors.hpp"
#include "nashpde/rng.hpp"
#include "support.hpp"

namespace nashpde {
namespace {

using testing::observed_order;
using testing::sample;

GridFunction unit_vector(const Grid& g, int i) {
    std::vector<double> v(static_cast<std::size_t>(g.interior_count()), 0.0);
    v[static_cast<std::size_t>(i)] = 1.0;
    return GridFunction(g, std::move(v));
}

TEST(EllipticOperator, RejectsIndefiniteCoefficients) {
    const Grid g2 = Grid::box(0.0, 1.0, 5, 0.0, 1.0, 5);
    EXPECT_THROW(EllipticOperator(g2, 1.0, 2.0, 1.0), StructuralError);  // det < 0
    const Grid g1 = Grid::line(0.0, 1.0, 5);
    EXPECT_THROW(EllipticOperator(g1, -1.0), StructuralError);
    EXPECT_NO_THROW(EllipticOperator(g2, 2.0, 0.5, 1.0));
}

TEST(EllipticOperator, AssembledMatrixIsExactlySymmetric) {
    const Grid g = Grid::box(0.0, 1.0, 6, 0.0, 2.0, 7);
    const EllipticOperator op(g, 1.5, 0.4, 0.9);
    const int n = g.interior_count();
    std::vector<std::vector<double>> columns;
    for (int i = 0; i < n; ++i) columns.push_back(op.apply(unit_vector(g, i).values()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            EXPECT_EQ(columns[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                      columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
        }
    }
}

TEST(SolveState, ZeroDataGivesZero) {
    const Grid g = Grid::line(0.0, 1.0, 17);
    const EllipticOperator op(g);
    const GridFunction y = solve_state(op, Expr::parse("0"), GridFunction(g));
    EXPECT_EQ(max_abs(y), 0.0);
}

TEST(SolveState, ManufacturedLinear1d) {
    // -y'' = pi^2 sin(pi x)  =>  y = sin(pi x)
    const Grid g = Grid::line(0.0, 1.0, 65);
    const EllipticOperator op(g);
    const GridFunction rhs = sample(
        g, [](double x, double) { return M_PI * M_PI * std::sin(M_PI * x); });
    const GridFunction y = solve_state(op, Expr::parse("0"), rhs);
    const GridFunction exact = sample(g, [](double x, double) { return std::sin(M_PI * x); });
    const double h = g.spacing(0);
    EXPECT_LE(testing::max_node_error(y, exact), 2.0 * h * h);
}

TEST(SolveState, ManufacturedSemilinearOrder) {
    // -y'' + y^3 = pi^2 sin(pi x) + sin(pi x)^3
    std::vector<double> errors;
    for (int points : {33, 65, 129}) {
        const Grid g = Grid::line(0.0, 1.0, points);
        const EllipticOperator op(g);
        const GridFunction rhs = sample(g, [](double x, double) {
            const double s = std::sin(M_PI * x);
            return M_PI * M_PI * s + s * s * s;
        });
        const GridFunction y = solve_state(op, Expr::parse("y^3"), rhs);
        const GridFunction exact =
            sample(g, [](double x, double) { return std::sin(M_PI * x); });
        errors.push_back(testing::max_node_error(y, exact));
    }
    const double order = observed_order(errors);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
}

TEST(SolveState, ManufacturedCrossCoefficients2d) {
    // y = sin(pi x1) sin(pi x2), a = [[1, 0.3], [0.3, 1]]:
    // -div(a grad y) = 2 pi^2 sin sin - 0.6 pi^2 cos cos.
    std::vector<double> errors;
    for (int points : {9, 17, 33}) {
        const Grid g = Grid::box(0.0, 1.0, points, 0.0, 1.0, points);
        const EllipticOperator op(g, 1.0, 0.3, 1.0);
        const GridFunction rhs = sample(g, [](double x1, double x2) {
            return 2.0 * M_PI * M_PI * std::sin(M_PI * x1) * std::sin(M_PI * x2) -
                   0.6 * M_PI * M_PI * std::cos(M_PI * x1) * std::cos(M_PI * x2);
        });
        const GridFunction y = solve_state(op, Expr::parse("0"), rhs);
        const GridFunction exact = sample(g, [](double x1, double x2) {
            return std::sin(M_PI * x1) * std::sin(M_PI * x2);
        });
        errors.push_back(testing::max_node_error(y, exact));
    }
    const double order = observed_order(errors);
    EXPECT_GE(order, 1.8);
    EXPECT_LE(order, 2.2);
}

TEST(SolveState, MonotoneUniquenessAcrossInitialGuesses) {
    const Grid g = Grid::line(0.0, 1.0, 33);
    const EllipticOperator op(g);
    const Expr f = Expr::parse("y^3 + 2*y");
    const GridFunction rhs =
        sample(g, [](double x, double) { return 3.0 * std::sin(M_PI * x) + 1.0; });
    NewtonSettings s;

    const GridFunction from_zero = solve_state(op, f, rhs, s);
    Rng rng(17);
    const GridFunction guess = random_field(rng, g, -2.0, 2.0);
    const GridFunction from_random = solve_state(op, f, rhs, s, guess);
    EXPECT_LE(l2_norm(from_zero - from_random), 10.0 * s.abs_tolerance);
}

TEST(SolveState, IterationLimitErrorCarriesResidual) {
    const Grid g = Grid::line(0.0, 1.0, 17);
    const EllipticOperator op(g);
    const GridFunction rhs = GridFunction::constant(g, 5.0);
    NewtonSettings s;
    s.max_iters = 1;
    s.abs_tolerance = 1e-13;
    try {
        solve_state(op, Expr::parse("y^3"), rhs, s);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(SolveLinearized, ZeroDirection) {
    const Grid g = Grid::line(0.0, 1.0, 17);
    const EllipticOperator op(g);
    const GridFunction y = GridFunction::constant(g, 0.5);
    const GridFunction z = solve_linearized(op, Expr::parse("y^3"), y, GridFunction(g));
    EXPECT_EQ(max_abs(z), 0.0);
}

TEST(SolveLinearized, CoincidesWithStateSolveWhenLinear) {
    const Grid g = Grid::line(0.0, 1.0, 33);
    const EllipticOperator op(g);
    Rng rng(2);
    const GridFunction v = random_field(rng, g, -1.0, 1.0);
    const GridFunction z = solve_linearized(op, Expr::parse("0"), GridFunction(g), v);
    const GridFunction y = solve_state(op, Expr::parse("0"), v);
    EXPECT_LE(testing::max_node_error(z, y), 1e-12);
}

TEST(SolveLinearized, FiniteDifferenceOracleOnStateMap) {
    const Grid g = Grid::line(0.0, 1.0, 33);
    const EllipticOperator op(g);
    const Expr f = Expr::parse("y^3 + y");
    NewtonSettings tight;
    tight.abs_tolerance = 1e-12;

    const GridFunction u = sample(g, [](double x, double) { return std::sin(2.0 * M_PI * x); });
    const GridFunction v = sample(g, [](double x, double) { return std::cos(M_PI * x) * x; });
    const GridFunction y = solve_state(op, f, u, tight);
    const GridFunction z = solve_linearized(op, f, y, v);

    const double eps = 1e-4;
    const GridFunction y_plus = solve_state(op, f, u + v * eps, tight);
    const GridFunction y_minus = solve_state(op, f, u - v * eps, tight);
    const GridFunction fd = (y_plus - y_minus) * (1.0 / (2.0 * eps));
    EXPECT_LE(l2_norm(fd - z), 1e-5 * l2_norm(z));
}

TEST(SolveSecondOrder, VanishesForLinearPde) {
    const Grid g = Grid::line(0.0, 1.0, 17);
    const EllipticOperator op(g);
    Rng rng(3);
    const GridFunction z1 = random_field(rng, g, -1.0, 1.0);
    const GridFunction z2 = random_field(rng, g, -1.0, 1.0);
    const GridFunction out =
        solve_second_order(op, Expr::parse("0"), GridFunction(g), z1, z2);
    EXPECT_EQ(max_abs(out), 0.0);
}

TEST(SolveSecondOrder, SymmetricInDirections) {
    const Grid g = Grid::line(0.0, 1.0, 33);
    const EllipticOperator op(g);
    const Expr f = Expr::parse("y^3");
    const GridFunction y = sample(g, [](double x, double) { return std::sin(M_PI * x); });
    Rng rng(4);
    const GridFunction z1 = random_field(rng, g, -1.0, 1.0);
    const GridFunction z2 = random_field(rng, g, -1.0, 1.0);
    const GridFunction a = solve_second_order(op, f, y, z1, z2);
    const GridFunction b = solve_second_order(op, f, y, z2, z1);
    EXPECT_LE(testing::max_node_error(a, b), 1e-12);
}

TEST(SolveSecondOrder, TaylorRemainderThirdOrder) {
    const Grid g = Grid::line(0.0, 1.0, 65);
    const EllipticOperator op(g);
    const Expr f = Expr::parse("y^3");
    NewtonSettings tight;
    tight.abs_tolerance = 1e-12;

    const GridFunction u = sample(g, [](double x, double) { return 4.0 * std::sin(M_PI * x); });
    const GridFunction v =
        sample(g, [](double x, double) { return 20.0 * std::sin(2.0 * M_PI * x); });

    const GridFunction y = solve_state(op, f, u, tight);
    const GridFunction z = solve_linearized(op, f, y, v);
    const GridFunction zz = solve_second_order(op, f, y, z, z);

    std::vector<double> remainders;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) {
        const GridFunction y_eps = solve_state(op, f, u + v * eps, tight);
        const GridFunction model = y + z * eps + zz * (0.5 * eps * eps);
        remainders.push_back(l2_norm(y_eps - model));
    }
    EXPECT_GE(observed_order(remainders), 2.7);
}

TEST(SolveAdjoint, ZeroSource) {
    const Grid g = Grid::line(0.0, 1.0, 17);
    const EllipticOperator op(g);
    const GridFunction y = GridFunction::constant(g, 0.3);
    const GridFunction phi = solve_adjoint(op, Expr::parse("y^3"), y, GridFunction(g));
    EXPECT_EQ(max_abs(phi), 0.0);
}

TEST(SolveAdjoint, DualityIdentity) {
    const Grid g = Grid::line(0.0, 1.0, 65);
    const EllipticOperator op(g);
    const Expr f = Expr::parse("y^3 + y");
    const GridFunction u = sample(g, [](double x, double) { return std::sin(M_PI * x); });
    const GridFunction y = solve_state(op, f, u);

    Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const GridFunction source = random_field(rng, g, -1.0, 1.0);
        const GridFunction v = random_field(rng, g, -1.0, 1.0);
        const GridFunction phi = solve_adjoint(op, f, y, source);
        const GridFunction z = solve_linearized(op, f, y, v);
        const double lhs = inner_product(phi, v);
        const double rhs = inner_product(source, z);
        const double scale = std::max(l2_norm(source) * l2_norm(z), 1e-12);
        EXPECT_LE(std::abs(lhs - rhs) / scale, 1e-10);
    }
}

TEST(SolveAdjoint, DualityIdentity2d) {
    const Grid g = Grid::box(0.0, 1.0, 17, 0.0, 1.0, 17);
    const EllipticOperator op(g, 1.0, 0.2, 1.5);
    const Expr f = Expr::parse("exp(y) - 1");
    const GridFunction u = sample(g, [](double x1, double x2) {
        return std::sin(M_PI * x1) * std::sin(2.0 * M_PI * x2);
    });
    const GridFunction y = solve_state(op, f, u);
    Rng rng(8);
    const GridFunction source = random_field(rng, g, -1.0, 1.0);
    const GridFunction v = random_field(rng, g, -1.0, 1.0);
    const double lhs = inner_product(solve_adjoint(op, f, y, source), v);
    const double rhs = inner_product(source, solve_linearized(op, f, y, v));
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    EXPECT_LE(std::abs(lhs - rhs) / scale, 1e-9);
}

TEST(Cg, IterationCapRaisesSolverError) {
    const Grid g = Grid::line(0.0, 1.0, 65);
    const EllipticOperator op(g);
    LinearSolveSettings s;
    s.max_iters = 1;
    Rng rng(9);
    const GridFunction v = random_field(rng, g, -1.0, 1.0);
    EXPECT_THROW(solve_linearized(op, Expr::parse("0"), GridFunction(g), v, s), SolverError);
}

TEST(Convergence, AdjointAndLinearizedUnderRefinement) {
    // Manufactured adjoint: with f = 0 and source = pi^2 sin(pi x),
    // phi = sin(pi x); same for the linearized equation.
    std::vector<double> adjoint_errors, linearized_errors;
    for (int points : {17, 33, 65, 129}) {
        const Grid g = Grid::line(0.0, 1.0, points);
        const EllipticOperator op(g);
        const GridFunction src = sample(
            g, [](double x, double) { return M_PI * M_PI * std::sin(M_PI * x); });
        const GridFunction exact =
            sample(g, [](double x, double) { return std::sin(M_PI * x); });
        const GridFunction zero(g);
        adjoint_errors.push_back(
            testing::max_node_error(solve_adjoint(op, Expr::parse("0"), zero, src), exact));
        linearized_errors.push_back(testing::max_node_error(
            solve_linearized(op, Expr::parse("0"), zero, src), exact));
    }
    EXPECT_GE(observed_order(adjoint_errors), 1.8);
    EXPECT_GE(observed_order(linearized_errors), 1.8);
}

}  // namespace
}  // namespace nashpde
