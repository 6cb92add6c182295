#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nashpde/equilibrium.hpp"

namespace nashpde {

/// Per-player node flags: fixed where |u_hat_star| exceeds the activity
/// threshold. On boxes the critical subspace is exactly the profiles that
/// vanish on fixed nodes.
struct ActiveSetMask {
    std::vector<std::vector<bool>> fixed;  // [player][node]
    double eps_act;

    int free_count() const;
    int free_count(int k) const;
    int fixed_count(int k) const;
};

ActiveSetMask critical_subspace(const EquilibriumResult& result, double eps_act);

/// Scale-aware default activity threshold: 1e-7 * (1 + max|u_hat_star|).
double default_eps_act(const EquilibriumResult& result);

enum class StabilityVerdict { FullyStable, NotCertified, Indefinite };

const char* to_string(StabilityVerdict v);

struct StabilityCertificate {
    ActiveSetMask mask;
    double lambda_min;  // +infinity when the free set is empty
    double delta;
    StabilityVerdict verdict;
    /// Eigenvector witness: unit L2 norm, zero on fixed nodes. Absent when
    /// the free set is empty.
    std::optional<ControlProfile> witness;
    std::string diagnostic;
};

struct CertifyOptions {
    /// Free dimensions above this use matrix-free Lanczos; at or below,
    /// a dense assembly of the reduced operator.
    int dense_limit = 1000;
    int lanczos_max_iters = 400;
    double lanczos_tol = 1e-12;
    LinearSolveSettings linear;
};

/// Certify full stability at a converged equilibrium: smallest eigenvalue
/// of the symmetrized pseudo-gradient Jacobian restricted to the free
/// (critical) subspace. Verdict is fully-stable iff lambda_min >= delta,
/// indefinite iff lambda_min < 0.
StabilityCertificate certify(const GameSpec& spec, const EquilibriumResult& result,
                             double delta = 1e-8, double eps_act = 0.0,
                             const CertifyOptions& options = {});

/// Reduced operator action: restrict - symmetrized Jacobian - restrict.
/// Exposed for the matrix-free/dense agreement checks.
ControlProfile apply_reduced_hessian(const GameSpec& spec, const EquilibriumPoint& pt,
                                     const ActiveSetMask& mask, const ControlProfile& v,
                                     const LinearSolveSettings& linear = {});

struct LocalNashReport {
    int samples_per_player;
    double radius;
    int violations;
    double worst_gap;  // most negative cost difference seen
};

/// Sample-based check that each player's cost does not drop below the
/// equilibrium value on feasible balls around u_bar (the fully-stable =>
/// local-Nash implication).
LocalNashReport verify_local_nash(const GameSpec& spec, const EquilibriumResult& result,
                                  const StabilityCertificate& certificate,
                                  int samples, double radius,
                                  std::uint64_t seed = 0x10ca17ULL,
                                  const NewtonSettings& newton = {});

}  // namespace nashpde
