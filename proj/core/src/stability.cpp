#include "nashpde/stability.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "nashpde/errors.hpp"
#include "nashpde/rng.hpp"

namespace nashpde {

int ActiveSetMask::free_count() const {
    int n = 0;
    for (std::size_t k = 0; k < fixed.size(); ++k) n += free_count(static_cast<int>(k));
    return n;
}

int ActiveSetMask::free_count(int k) const {
    int n = 0;
    for (bool b : fixed[static_cast<std::size_t>(k)]) {
        if (!b) ++n;
    }
    return n;
}

int ActiveSetMask::fixed_count(int k) const {
    return static_cast<int>(fixed[static_cast<std::size_t>(k)].size()) - free_count(k);
}

double default_eps_act(const EquilibriumResult& result) {
    double sup = 0.0;
    for (int k = 0; k < result.u_hat_star.player_count(); ++k) {
        sup = std::max(sup, max_abs(result.u_hat_star[k]));
    }
    return 1e-7 * (1.0 + sup);
}

ActiveSetMask critical_subspace(const EquilibriumResult& result, double eps_act) {
    if (!(eps_act > 0.0)) {
        throw StructuralError("critical_subspace: eps_act must be > 0");
    }
    ActiveSetMask mask;
    mask.eps_act = eps_act;
    for (int k = 0; k < result.u_hat_star.player_count(); ++k) {
        const GridFunction& uhat = result.u_hat_star[k];
        std::vector<bool> flags(static_cast<std::size_t>(uhat.size()));
        for (int i = 0; i < uhat.size(); ++i) {
            flags[static_cast<std::size_t>(i)] = std::abs(uhat[i]) > eps_act;
        }
        mask.fixed.push_back(std::move(flags));
    }
    return mask;
}

const char* to_string(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::FullyStable: return "fully-stable";
        case StabilityVerdict::NotCertified: return "not-certified";
        case StabilityVerdict::Indefinite: return "indefinite";
    }
    return "?";
}

namespace {

ControlProfile mask_profile(const ActiveSetMask& mask, const ControlProfile& v) {
    std::vector<GridFunction> parts;
    parts.reserve(static_cast<std::size_t>(v.player_count()));
    for (int k = 0; k < v.player_count(); ++k) {
        const auto& flags = mask.fixed[static_cast<std::size_t>(k)];
        std::vector<double> vals(v[k].values().begin(), v[k].values().end());
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (flags[i]) vals[i] = 0.0;
        }
        parts.push_back(GridFunction(v[k].grid(), std::move(vals)));
    }
    return ControlProfile(std::move(parts));
}

/// Pack the free nodes of a profile into a flat coordinate vector.
Eigen::VectorXd restrict_to_free(const ActiveSetMask& mask, const ControlProfile& v) {
    Eigen::VectorXd out(mask.free_count());
    int pos = 0;
    for (int k = 0; k < v.player_count(); ++k) {
        const auto& flags = mask.fixed[static_cast<std::size_t>(k)];
        for (int i = 0; i < v[k].size(); ++i) {
            if (!flags[static_cast<std::size_t>(i)]) out[pos++] = v[k][i];
        }
    }
    return out;
}

ControlProfile extend_from_free(const GameSpec& spec, const ActiveSetMask& mask,
                                const Eigen::VectorXd& x) {
    std::vector<GridFunction> parts;
    int pos = 0;
    for (int k = 0; k < spec.player_count(); ++k) {
        const auto& flags = mask.fixed[static_cast<std::size_t>(k)];
        std::vector<double> vals(flags.size(), 0.0);
        for (std::size_t i = 0; i < flags.size(); ++i) {
            if (!flags[i]) vals[i] = x[pos++];
        }
        parts.push_back(GridFunction(spec.grid(), std::move(vals)));
    }
    return ControlProfile(std::move(parts));
}

struct EigenPair {
    double value;
    Eigen::VectorXd vector;
    bool converged;
    std::string diagnostic;
};

EigenPair smallest_eig_dense(const GameSpec& spec, const EquilibriumPoint& pt,
                             const ActiveSetMask& mask, const LinearSolveSettings& linear) {
    const int n = mask.free_count();
    Eigen::MatrixXd H(n, n);
    for (int col = 0; col < n; ++col) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[col] = 1.0;
        const ControlProfile ev = extend_from_free(spec, mask, e);
        const ControlProfile Sv = apply_symmetrized_jacobian(spec, pt, ev, linear);
        H.col(col) = restrict_to_free(mask, mask_profile(mask, Sv));
    }
    H = 0.5 * (H + H.transpose()).eval();  // scrub linear-solver asymmetry
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) {
        return {0.0, Eigen::VectorXd(), false, "dense eigensolver failed"};
    }
    return {es.eigenvalues()[0], es.eigenvectors().col(0), true, ""};
}

EigenPair smallest_eig_lanczos(const GameSpec& spec, const EquilibriumPoint& pt,
                               const ActiveSetMask& mask, const CertifyOptions& options) {
    const int n = mask.free_count();
    const int max_iters = std::min(options.lanczos_max_iters, n);

    auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const ControlProfile xv = extend_from_free(spec, mask, x);
        const ControlProfile Sx = apply_symmetrized_jacobian(spec, pt, xv, options.linear);
        return restrict_to_free(mask, mask_profile(mask, Sx));
    };

    Rng rng(0x1a2cULL);
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = rng.uniform(-1.0, 1.0);
    q.normalize();

    std::vector<Eigen::VectorXd> basis;
    std::vector<double> alpha, beta;
    basis.push_back(q);

    double theta_prev = std::numeric_limits<double>::infinity();
    int stagnant = 0;
    Eigen::VectorXd ritz_small;

    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd w = apply(basis.back());
        const double a = basis.back().dot(w);
        alpha.push_back(a);
        w -= a * basis.back();
        if (it > 0) w -= beta.back() * basis[basis.size() - 2];
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& v : basis) w -= v.dot(w) * v;
        }

        const int k = static_cast<int>(alpha.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            T(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < k) {
                T(i, i + 1) = beta[static_cast<std::size_t>(i)];
                T(i + 1, i) = beta[static_cast<std::size_t>(i)];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const double theta = es.eigenvalues()[0];
        ritz_small = es.eigenvectors().col(0);

        if (std::abs(theta - theta_prev) <= options.lanczos_tol * std::max(1.0, std::abs(theta))) {
            ++stagnant;
        } else {
            stagnant = 0;
        }
        theta_prev = theta;

        const double bnorm = w.norm();
        const bool basis_exhausted = (bnorm <= 1e-14) || (k == n);
        if ((stagnant >= 3 && k >= 3) || basis_exhausted || it == max_iters - 1) {
            Eigen::VectorXd vec = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < k; ++i) vec += ritz_small[i] * basis[static_cast<std::size_t>(i)];
            vec.normalize();
            const bool ok = basis_exhausted || stagnant >= 3;
            return {theta, vec, ok,
                    ok ? "" : "Lanczos reached the iteration cap before the smallest "
                              "Ritz value stagnated"};
        }
        beta.push_back(bnorm);
        basis.push_back(w / bnorm);
    }
    return {theta_prev, Eigen::VectorXd(), false, "Lanczos made no iterations"};
}

}  // namespace

ControlProfile apply_reduced_hessian(const GameSpec& spec, const EquilibriumPoint& pt,
                                     const ActiveSetMask& mask, const ControlProfile& v,
                                     const LinearSolveSettings& linear) {
    const ControlProfile masked = mask_profile(mask, v);
    return mask_profile(mask, apply_symmetrized_jacobian(spec, pt, masked, linear));
}

StabilityCertificate certify(const GameSpec& spec, const EquilibriumResult& result,
                             double delta, double eps_act, const CertifyOptions& options) {
    if (!(delta > 0.0)) {
        throw StructuralError("certify: delta must be > 0");
    }
    if (eps_act == 0.0) eps_act = default_eps_act(result);
    ActiveSetMask mask = critical_subspace(result, eps_act);

    StabilityCertificate cert;
    cert.mask = mask;
    cert.delta = delta;

    const int free_dim = mask.free_count();
    if (free_dim == 0) {
        // Condition is vacuous on the empty subspace.
        cert.lambda_min = std::numeric_limits<double>::infinity();
        cert.verdict = StabilityVerdict::FullyStable;
        cert.diagnostic = "free set empty";
        return cert;
    }

    const EigenPair pair =
        free_dim <= options.dense_limit
            ? smallest_eig_dense(spec, result.point, mask, options.linear)
            : smallest_eig_lanczos(spec, result.point, mask, options);

    if (!pair.converged) {
        cert.lambda_min = pair.value;
        cert.verdict = StabilityVerdict::NotCertified;
        cert.diagnostic = pair.diagnostic;
        return cert;
    }

    cert.lambda_min = pair.value;
    if (pair.value >= delta) {
        cert.verdict = StabilityVerdict::FullyStable;
    } else if (pair.value < 0.0) {
        cert.verdict = StabilityVerdict::Indefinite;
    } else {
        cert.verdict = StabilityVerdict::NotCertified;
        cert.diagnostic = "lambda_min below the certification margin delta";
    }

    ControlProfile witness = extend_from_free(spec, mask, pair.vector);
    const double norm = l2_norm(witness);
    if (norm > 0.0) {
        cert.witness = witness * (1.0 / norm);
    }
    return cert;
}

LocalNashReport verify_local_nash(const GameSpec& spec, const EquilibriumResult& result,
                                  const StabilityCertificate& certificate,
                                  int samples, double radius, std::uint64_t seed,
                                  const NewtonSettings& newton) {
    if (certificate.verdict != StabilityVerdict::FullyStable) {
        throw StructuralError("verify_local_nash: certificate verdict is not fully-stable");
    }
    if (radius < 0.0) {
        throw StructuralError("verify_local_nash: radius must be >= 0");
    }

    LocalNashReport report{samples, radius, 0, 0.0};
    Rng rng(seed);

    for (int k = 0; k < spec.player_count(); ++k) {
        const double base_cost =
            cost(spec, k, result.u_bar, result.point.e, result.tilt, newton);
        const double slack = 1e-10 * (1.0 + std::abs(base_cost));
        const GridFunction lo = admissible_lower(spec, result.point.e, k);
        const GridFunction hi = admissible_upper(spec, result.point.e, k);

        for (int s = 0; s < samples; ++s) {
            GridFunction direction = random_field(rng, spec.grid(), -1.0, 1.0);
            const double dnorm = l2_norm(direction);
            if (dnorm > 0.0 && radius > 0.0) {
                direction = direction * (radius / dnorm);
            } else {
                direction = GridFunction(spec.grid());
            }
            // Projection is non-expansive, so the candidate stays in the ball.
            const GridFunction candidate = clamp(result.u_bar[k] + direction, lo, hi);

            std::vector<GridFunction> parts = result.u_bar.components();
            parts[static_cast<std::size_t>(k)] = candidate;
            const ControlProfile trial(std::move(parts));

            const double trial_cost = cost(spec, k, trial, result.point.e, result.tilt, newton);
            const double gap = trial_cost - base_cost;
            if (gap < -slack) {
                ++report.violations;
            }
            report.worst_gap = std::min(report.worst_gap, gap);
        }
    }
    return report;
}

}  // namespace nashpde
