#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nashpde/calculus.hpp"

namespace nashpde {

enum class EquilibriumMethod {
    ProjectedFixedPoint,
    GaussSeidelBestResponse,
};

struct SolverSettings {
    EquilibriumMethod method = EquilibriumMethod::ProjectedFixedPoint;
    double tau = 0.0;  // 0 = probe the symmetrized Jacobian norm and derive it
    double residual_tolerance = 1e-9;
    int max_outer_iters = 5000;
    NewtonSettings newton;

    void validate() const;
};

/// Outcome of an equilibrium solve. u_hat_star = u* - F(u_bar, e) is the
/// normal-cone residual the stability analysis is built on; when converged,
/// the natural-map residual is at most residual_tolerance.
struct EquilibriumResult {
    ControlProfile u_bar;
    EquilibriumPoint point;
    TiltVector tilt;  // the u* parameter the problem was solved at
    double residual;
    int iterations;
    ControlProfile u_hat_star;
    bool converged;
};

/// Per-iteration residual log entry.
struct IterationRecord {
    int iteration;
    double residual;
};

/// Solve the parametric variational inequality
///   u* in F(u, e) + N(u; U_ad(e))
/// by projected fixed-point or Gauss-Seidel best response. Non-convergence
/// is reported through converged = false, not an exception; callers decide.
EquilibriumResult solve_equilibrium(const GameSpec& spec, const Perturbation& e,
                                    const TiltVector& t, const SolverSettings& settings = {},
                                    const std::optional<ControlProfile>& warm_start = std::nullopt,
                                    std::vector<IterationRecord>* iteration_log = nullptr);

/// Natural-map residual ||u - proj(u - (F(u, e) - u*))|| with unit
/// auxiliary step; zero exactly at solutions of the discrete PVI.
double residual(const GameSpec& spec, const Perturbation& e, const TiltVector& t,
                const ControlProfile& u, const NewtonSettings& newton = {});

/// Node-wise sign check of u_hat_star against the active bounds
/// (the discrete normal-cone membership).
struct NormalConeReport {
    struct Player {
        bool pass;
        double worst_violation;
    };
    std::vector<Player> players;
    bool all_pass;
    double worst_violation;
    double tolerance;
};

NormalConeReport check_variational_equilibrium(const GameSpec& spec,
                                               const EquilibriumResult& result,
                                               double tolerance = 1e-9);

/// Step size the solver uses when settings.tau == 0: probes the spectral
/// norm of the symmetrized F'_u at the start point with a few power
/// iterations and returns 0.9 * min_zeta_floor / max(estimate, floor).
double derive_step_size(const GameSpec& spec, const EquilibriumPoint& start,
                        const LinearSolveSettings& linear = {});

}  // namespace nashpde
