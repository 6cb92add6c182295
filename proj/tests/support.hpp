#pragma once

// Shared instance builders and finite-difference oracles for the test
// suites. Everything here is test-side machinery, independent of the
// library's own derivative formulas.

#include <cmath>
#include <vector>

#include "nashpde/calculus.hpp"
#include "nashpde/game.hpp"
#include "nashpde/rng.hpp"

namespace nashpde::testing {

inline GridFunction sample(const Grid& grid, double (*fn)(double, double)) {
    std::vector<double> v(static_cast<std::size_t>(grid.interior_count()));
    for (int i = 0; i < grid.interior_count(); ++i) {
        const auto x = grid.node(i);
        v[static_cast<std::size_t>(i)] = fn(x[0], x[1]);
    }
    return GridFunction(grid, std::move(v));
}

inline double max_node_error(const GridFunction& a, const GridFunction& b) {
    return max_abs(a - b);
}

/// Single player with tracking cost 1/2 (y - yd)^2, identity weights and
/// bounds [lo, hi].
inline PlayerSpec tracking_player(const Grid& grid, const char* yd_expr, double zeta,
                                  double lo, double hi) {
    return PlayerSpec{Expr::parse("0.5*(y - yd)^2"),
                      sample_spatial(Expr::parse(yd_expr), grid),
                      GridFunction::constant(grid, zeta),
                      zeta,
                      GridFunction::constant(grid, 1.0),
                      GridFunction::constant(grid, lo),
                      GridFunction::constant(grid, hi)};
}

/// Player with explicit integrand text.
inline PlayerSpec player_with_integrand(const Grid& grid, const char* L, double zeta,
                                        double lo, double hi) {
    return PlayerSpec{Expr::parse(L),
                      GridFunction(grid),
                      GridFunction::constant(grid, zeta),
                      zeta,
                      GridFunction::constant(grid, 1.0),
                      GridFunction::constant(grid, lo),
                      GridFunction::constant(grid, hi)};
}

/// Convex LQ game: f = 0, L_k = 0.5*y^2 (so d2L/dy2 = 1), unit weights.
inline GameSpec convex_lq_game(const Grid& grid, int players, double zeta = 1.0,
                               double lo = -2.0, double hi = 2.0) {
    std::vector<PlayerSpec> ps;
    for (int k = 0; k < players; ++k) {
        ps.push_back(player_with_integrand(grid, "0.5*y^2", zeta, lo, hi));
    }
    return GameSpec(EllipticOperator(grid), Expr::parse("0"), std::move(ps));
}

/// m = 1 game with zero integrand: the equilibrium has the closed form
/// u = clamp(u*/zeta, lo, hi).
inline GameSpec scalar_closed_form_game(const Grid& grid, double zeta = 1.0,
                                        double lo = -1.0, double hi = 1.0) {
    std::vector<PlayerSpec> ps;
    ps.push_back(player_with_integrand(grid, "0", zeta, lo, hi));
    return GameSpec(EllipticOperator(grid), Expr::parse("0"), std::move(ps));
}

inline ControlProfile embed(const GameSpec& spec, int k, const GridFunction& h) {
    std::vector<GridFunction> parts(static_cast<std::size_t>(spec.player_count()),
                                    GridFunction(spec.grid()));
    parts[static_cast<std::size_t>(k)] = h;
    return ControlProfile(std::move(parts));
}

inline ControlProfile random_profile(Rng& rng, const GameSpec& spec, double lo = -1.0,
                                     double hi = 1.0) {
    std::vector<GridFunction> parts;
    for (int k = 0; k < spec.player_count(); ++k) {
        parts.push_back(random_field(rng, spec.grid(), lo, hi));
    }
    return ControlProfile(std::move(parts));
}

/// Least-squares slope of log2(err) against the doubling level: the
/// observed convergence order.
inline double observed_order(const std::vector<double>& errors) {
    // errors at h, h/2, h/4, ...: order ~ log2(e_i / e_{i+1}); average them.
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        sum += std::log2(errors[i] / errors[i + 1]);
    }
    return sum / static_cast<double>(errors.size() - 1);
}

}  // namespace nashpde::testing
