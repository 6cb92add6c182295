#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nashpde/equilibrium.hpp"

namespace nashpde {

struct HarnessSettings {
    int n_samples = 50;
    double radius_tilt = 1e-2;
    double radius_param = 1e-2;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = all hardware threads
    double drop_limit = 0.10;
    SolverSettings solver;

    void validate() const;
};

/// One harness draw: a pair of perturbed problems near the base pair, both
/// solved warm-started from the base equilibrium.
struct PerturbationSample {
    int index;
    TiltVector t1, t2;
    Perturbation e1, e2;
    EquilibriumResult sol1, sol2;
    ControlProfile tilt_diff;  // u*_1 - u*_2
    ControlProfile sol_diff;   // theta(u*_1,e_1) - theta(u*_2,e_2)
    double d_u, d_tilt, d_param;
    double lip_ratio;     // d_u / (d_tilt + d_param)
    double holder_ratio;  // d_u / (d_tilt + sqrt(d_param))

    /// ||(u*_1 - u*_2) - 2 kappa (theta_1 - theta_2)||.
    double lip_lhs(double kappa) const;
};

struct StabilityReport {
    std::vector<PerturbationSample> samples;
    int n_requested = 0;
    int n_dropped = 0;
    double kappa_hat = 0.0;
    double ell_hat = 0.0;
    double ell_hat_holder = 0.0;
    double lip_pass_rate = 0.0;
    double holder_pass_rate = 0.0;
    double worst_lip_violation = 0.0;
    double worst_holder_violation = 0.0;
    double residual_tolerance = 0.0;  // echoed for the slack model
    double min_penalty_floor = 0.0;
};

/// Sample tilt/parameter perturbation pairs around (base_t, base_e),
/// re-solve warm-started, and fit the largest kappa for which the
/// Lipschitz inequality holds on every sample with ell taken as the
/// max residual ratio. Deterministic given the seed; sample solves run
/// in parallel but the report is assembled in index order.
StabilityReport run_harness(const GameSpec& spec, const Perturbation& base_e,
                            const TiltVector& base_t, const HarnessSettings& settings);

/// CSV export: one row per sample (index, d_tilt, d_param, d_u, lip_lhs,
/// lip_rhs, holder_rhs at the fitted moduli) plus a trailing summary row.
/// Byte-stable for identical reports.
void export_report(const StabilityReport& report, const std::string& path);

}  // namespace nashpde
