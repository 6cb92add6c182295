#include "nashpde/calculus.hpp"

#include "nashpde/errors.hpp"

namespace nashpde {

namespace {

GridFunction curvature_weight(const GameSpec& spec, const PlayerSpec& player,
                              const GridFunction& y, const GridFunction& phi) {
    const Expr d2L = player.integrand.diff_y().diff_y();
    const Expr d2f = spec.f().diff_y().diff_y();
    const GridFunction lw = evaluate_integrand(d2L, y, player.target);
    const GridFunction fw = evaluate_state_function(d2f, y);
    return lw - multiply(phi, fw);
}

}  // namespace

EquilibriumPoint evaluate_point(const GameSpec& spec, ControlProfile u,
                                Perturbation e, const NewtonSettings& newton) {
    if (u.player_count() != spec.player_count()) {
        throw StructuralError("evaluate_point: player count mismatch");
    }
    GridFunction y = solve_state(spec.op(), spec.f(), total_source(spec, u, e), newton);

    std::vector<GridFunction> adjoints;
    std::vector<GridFunction> weights;
    adjoints.reserve(static_cast<std::size_t>(spec.player_count()));
    weights.reserve(static_cast<std::size_t>(spec.player_count()));
    for (int k = 0; k < spec.player_count(); ++k) {
        const PlayerSpec& player = spec.player(k);
        const Expr dL = player.integrand.diff_y();
        const GridFunction source =
            evaluate_integrand(dL, y, player.target) + e.player(k).e_cost;
        GridFunction phi = solve_adjoint(spec.op(), spec.f(), y, source, newton.linear);
        weights.push_back(curvature_weight(spec, player, y, phi));
        adjoints.push_back(std::move(phi));
    }
    return EquilibriumPoint{std::move(u), std::move(e), std::move(y),
                            std::move(adjoints), std::move(weights)};
}

GridFunction gradient(const GameSpec& spec, const EquilibriumPoint& pt, int k) {
    const PlayerSpec& player = spec.player(k);
    return multiply(player.control_penalty, pt.u[k]) +
           multiply(player.source_weight, pt.adjoints[static_cast<std::size_t>(k)]);
}

ControlProfile pseudo_gradient(const GameSpec& spec, const EquilibriumPoint& pt) {
    std::vector<GridFunction> parts;
    parts.reserve(static_cast<std::size_t>(spec.player_count()));
    for (int k = 0; k < spec.player_count(); ++k) {
        parts.push_back(gradient(spec, pt, k));
    }
    return ControlProfile(std::move(parts));
}

GridFunction hessian_block_apply(const GameSpec& spec, const EquilibriumPoint& pt,
                                 int k, int j, const GridFunction& h_j,
                                 const LinearSolveSettings& linear) {
    const PlayerSpec& pk = spec.player(k);
    const PlayerSpec& pj = spec.player(j);
    const GridFunction z =
        solve_linearized(spec.op(), spec.f(), pt.state, multiply(pj.source_weight, h_j), linear);
    const GridFunction w = multiply(pt.curvature_weights[static_cast<std::size_t>(k)], z);
    const GridFunction q = solve_adjoint(spec.op(), spec.f(), pt.state, w, linear);
    GridFunction out = multiply(pk.source_weight, q);
    if (k == j) {
        out = out + multiply(pk.control_penalty, h_j);
    }
    return out;
}

ControlProfile apply_jacobian(const GameSpec& spec, const EquilibriumPoint& pt,
                              const ControlProfile& h,
                              const LinearSolveSettings& linear) {
    const int m = spec.player_count();
    // s = sum_j K^{-1}(B_j h_j); row k only sees the sum.
    GridFunction s(spec.grid());
    for (int j = 0; j < m; ++j) {
        s = s + solve_linearized(spec.op(), spec.f(), pt.state,
                                 multiply(spec.player(j).source_weight, h[j]), linear);
    }
    std::vector<GridFunction> rows;
    rows.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const PlayerSpec& pk = spec.player(k);
        const GridFunction q = solve_adjoint(
            spec.op(), spec.f(), pt.state,
            multiply(pt.curvature_weights[static_cast<std::size_t>(k)], s), linear);
        rows.push_back(multiply(pk.source_weight, q) + multiply(pk.control_penalty, h[k]));
    }
    return ControlProfile(std::move(rows));
}

ControlProfile apply_jacobian_transpose(const GameSpec& spec,
                                        const EquilibriumPoint& pt,
                                        const ControlProfile& h,
                                        const LinearSolveSettings& linear) {
    const int m = spec.player_count();
    // (F'^T h)_j = B_j K^{-1} [sum_k D_k K^{-1}(B_k h_k)] + zeta_j h_j.
    GridFunction s(spec.grid());
    for (int k = 0; k < m; ++k) {
        const GridFunction t =
            solve_linearized(spec.op(), spec.f(), pt.state,
                             multiply(spec.player(k).source_weight, h[k]), linear);
        s = s + multiply(pt.curvature_weights[static_cast<std::size_t>(k)], t);
    }
    const GridFunction r = solve_adjoint(spec.op(), spec.f(), pt.state, s, linear);
    std::vector<GridFunction> rows;
    rows.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const PlayerSpec& pj = spec.player(j);
        rows.push_back(multiply(pj.source_weight, r) + multiply(pj.control_penalty, h[j]));
    }
    return ControlProfile(std::move(rows));
}

ControlProfile apply_symmetrized_jacobian(const GameSpec& spec,
                                          const EquilibriumPoint& pt,
                                          const ControlProfile& h,
                                          const LinearSolveSettings& linear) {
    const ControlProfile a = apply_jacobian(spec, pt, h, linear);
    const ControlProfile b = apply_jacobian_transpose(spec, pt, h, linear);
    return (a + b) * 0.5;
}

double quadratic_form(const GameSpec& spec, const EquilibriumPoint& pt,
                      const ControlProfile& h, const LinearSolveSettings& linear) {
    return inner_product(apply_jacobian(spec, pt, h, linear), h);
}

double quadratic_form_penalty_part(const GameSpec& spec, const ControlProfile& h) {
    double q2 = 0.0;
    for (int k = 0; k < spec.player_count(); ++k) {
        q2 += inner_product(multiply(spec.player(k).control_penalty, h[k]), h[k]);
    }
    return q2;
}

}  // namespace nashpde
