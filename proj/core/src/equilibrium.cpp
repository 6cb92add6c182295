#include "nashpde/equilibrium.hpp"

#include <cmath>

#include "nashpde/errors.hpp"
#include "nashpde/rng.hpp"

namespace nashpde {

void SolverSettings::validate() const {
    if (tau < 0.0) {
        throw StructuralError("SolverSettings: tau must be >= 0 (0 = auto)");
    }
    if (!(residual_tolerance > 0.0)) {
        throw StructuralError("SolverSettings: residual_tolerance must be > 0");
    }
    if (max_outer_iters < 1) {
        throw StructuralError("SolverSettings: max_outer_iters must be >= 1");
    }
    newton.validate();
}

namespace {

ControlProfile tilt_profile(const GameSpec& spec, const TiltVector& t) {
    std::vector<GridFunction> parts;
    parts.reserve(static_cast<std::size_t>(spec.player_count()));
    for (int k = 0; k < spec.player_count(); ++k) parts.push_back(t[k]);
    return ControlProfile(std::move(parts));
}

double natural_residual(const GameSpec& spec, const Perturbation& e,
                        const ControlProfile& u, const ControlProfile& step_map) {
    const ControlProfile projected = project_admissible(spec, e, u - step_map);
    return l2_norm(u - projected);
}

}  // namespace

double derive_step_size(const GameSpec& spec, const EquilibriumPoint& start,
                        const LinearSolveSettings& linear) {
    constexpr int kPowerIters = 20;
    Rng rng(0x5eed5eedULL);
    ControlProfile v = [&] {
        std::vector<GridFunction> parts;
        for (int k = 0; k < spec.player_count(); ++k) {
            parts.push_back(random_field(rng, spec.grid(), -1.0, 1.0));
        }
        return ControlProfile(std::move(parts));
    }();
    double norm = l2_norm(v);
    double estimate = 0.0;
    for (int it = 0; it < kPowerIters && norm > 0.0; ++it) {
        v = apply_symmetrized_jacobian(spec, start, v * (1.0 / norm), linear);
        norm = l2_norm(v);
        estimate = norm;
    }
    const double floor = spec.min_penalty_floor();
    return 0.9 * floor / std::max(estimate, floor);
}

EquilibriumResult solve_equilibrium(const GameSpec& spec, const Perturbation& e,
                                    const TiltVector& t, const SolverSettings& settings,
                                    const std::optional<ControlProfile>& warm_start,
                                    std::vector<IterationRecord>* iteration_log) {
    settings.validate();
    const ControlProfile tilt = tilt_profile(spec, t);

    ControlProfile u = project_admissible(
        spec, e, warm_start ? *warm_start : ControlProfile::zero(spec));

    EquilibriumPoint pt = evaluate_point(spec, u, e, settings.newton);
    double tau = settings.tau;
    if (tau == 0.0) {
        tau = derive_step_size(spec, pt, settings.newton.linear);
    }

    auto make_result = [&](double res, int iters, bool converged) {
        ControlProfile u_hat = tilt - pseudo_gradient(spec, pt);
        return EquilibriumResult{u,     std::move(pt),     t,        res,
                                 iters, std::move(u_hat), converged};
    };

    if (settings.method == EquilibriumMethod::ProjectedFixedPoint) {
        for (int iter = 0;; ++iter) {
            const ControlProfile step_map = pseudo_gradient(spec, pt) - tilt;
            const double res = natural_residual(spec, e, u, step_map);
            if (iteration_log) iteration_log->push_back({iter, res});
            if (res <= settings.residual_tolerance) {
                return make_result(res, iter, true);
            }
            if (iter >= settings.max_outer_iters) {
                return make_result(res, iter, false);
            }
            u = project_admissible(spec, e, u - step_map * tau);
            pt = evaluate_point(spec, u, e, settings.newton);
        }
    }

    // Gauss-Seidel best response: cyclically run projected gradient on each
    // player's problem with the others frozen.
    const int inner_max = 200;
    for (int cycle = 0;; ++cycle) {
        {
            const ControlProfile step_map = pseudo_gradient(spec, pt) - tilt;
            const double res = natural_residual(spec, e, u, step_map);
            if (iteration_log) iteration_log->push_back({cycle, res});
            if (res <= settings.residual_tolerance) {
                return make_result(res, cycle, true);
            }
            if (cycle >= settings.max_outer_iters) {
                return make_result(res, cycle, false);
            }
        }
        for (int k = 0; k < spec.player_count(); ++k) {
            const PlayerSpec& player = spec.player(k);
            const GridFunction lo = admissible_lower(spec, e, k);
            const GridFunction hi = admissible_upper(spec, e, k);
            const double inner_tol = 0.1 * settings.residual_tolerance;
            for (int inner = 0; inner < inner_max; ++inner) {
                const GridFunction y =
                    solve_state(spec.op(), spec.f(), total_source(spec, u, e), settings.newton);
                const GridFunction source =
                    evaluate_integrand(player.integrand.diff_y(), y, player.target) +
                    e.player(k).e_cost;
                const GridFunction phi =
                    solve_adjoint(spec.op(), spec.f(), y, source, settings.newton.linear);
                const GridFunction g = multiply(player.control_penalty, u[k]) +
                                       multiply(player.source_weight, phi) - t[k];
                const GridFunction u_k_next = clamp(u[k] - g * tau, lo, hi);
                const double moved = l2_norm(u_k_next - u[k]);
                std::vector<GridFunction> parts = u.components();
                parts[static_cast<std::size_t>(k)] = u_k_next;
                u = ControlProfile(std::move(parts));
                if (moved <= inner_tol) break;
            }
        }
        pt = evaluate_point(spec, u, e, settings.newton);
    }
}

double residual(const GameSpec& spec, const Perturbation& e, const TiltVector& t,
                const ControlProfile& u, const NewtonSettings& newton) {
    const EquilibriumPoint pt = evaluate_point(spec, u, e, newton);
    const ControlProfile step_map = pseudo_gradient(spec, pt) - tilt_profile(spec, t);
    return natural_residual(spec, e, u, step_map);
}

NormalConeReport check_variational_equilibrium(const GameSpec& spec,
                                               const EquilibriumResult& result,
                                               double tolerance) {
    NormalConeReport report;
    report.tolerance = tolerance;
    report.all_pass = true;
    report.worst_violation = 0.0;
    for (int k = 0; k < spec.player_count(); ++k) {
        const GridFunction lo = admissible_lower(spec, result.point.e, k);
        const GridFunction hi = admissible_upper(spec, result.point.e, k);
        const GridFunction& uk = result.u_bar[k];
        const GridFunction& uhat = result.u_hat_star[k];
        double worst = 0.0;
        for (int i = 0; i < uk.size(); ++i) {
            double violation;
            if (uk[i] <= lo[i]) {
                violation = std::max(uhat[i], 0.0);  // must point below
            } else if (uk[i] >= hi[i]) {
                violation = std::max(-uhat[i], 0.0);  // must point above
            } else {
                violation = std::abs(uhat[i]);  // must vanish strictly inside
            }
            worst = std::max(worst, violation);
        }
        report.players.push_back({worst <= tolerance, worst});
        report.worst_violation = std::max(report.worst_violation, worst);
        report.all_pass = report.all_pass && worst <= tolerance;
    }
    return report;
}

}  // namespace nashpde
