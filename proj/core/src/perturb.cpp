#include "nashpde/perturb.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "nashpde/errors.hpp"
#include "nashpde/rng.hpp"

namespace nashpde {

void HarnessSettings::validate() const {
    if (n_samples < 0) throw StructuralError("HarnessSettings: n_samples must be >= 0");
    if (radius_tilt < 0.0 || radius_param < 0.0) {
        throw StructuralError("HarnessSettings: radii must be >= 0");
    }
    if (!(drop_limit >= 0.0 && drop_limit <= 1.0)) {
        throw StructuralError("HarnessSettings: drop_limit must be in [0, 1]");
    }
    solver.validate();
}

double PerturbationSample::lip_lhs(double kappa) const {
    return l2_norm(tilt_diff - sol_diff * (2.0 * kappa));
}

namespace {

constexpr double kTinyNorm = 1e-300;
constexpr double kTinyParam = 1e-14;

GridFunction scale_to_l2(const GridFunction& f, double target) {
    const double n = l2_norm(f);
    return n > kTinyNorm ? f * (target / n) : GridFunction(f.grid());
}

GridFunction scale_to_max(const GridFunction& f, double target) {
    const double n = max_abs(f);
    return n > kTinyNorm ? f * (target / n) : GridFunction(f.grid());
}

TiltVector draw_tilt(Rng& rng, const GameSpec& spec, const TiltVector& base,
                     double radius) {
    const int m = spec.player_count();
    const double per_player = radius / std::sqrt(static_cast<double>(m));
    std::vector<GridFunction> parts;
    parts.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const GridFunction field = random_field(rng, spec.grid(), -1.0, 1.0);
        const double magnitude = per_player * rng.uniform();
        parts.push_back(base[k] + scale_to_l2(field, magnitude));
    }
    return TiltVector(std::move(parts));
}

Perturbation draw_perturbation(Rng& rng, const GameSpec& spec, const Perturbation& base,
                               double radius) {
    const int m = spec.player_count();
    const double comp_radius = radius / static_cast<double>(1 + 3 * m);

    const GridFunction e_state_delta =
        scale_to_l2(random_field(rng, spec.grid(), -1.0, 1.0), comp_radius * rng.uniform());

    struct BoundDelta {
        GridFunction cost, lower, upper;
    };
    std::vector<BoundDelta> deltas;
    deltas.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        GridFunction dc =
            scale_to_l2(random_field(rng, spec.grid(), -1.0, 1.0), comp_radius * rng.uniform());
        GridFunction dl =
            scale_to_max(random_field(rng, spec.grid(), -1.0, 1.0), comp_radius * rng.uniform());
        GridFunction du =
            scale_to_max(random_field(rng, spec.grid(), -1.0, 1.0), comp_radius * rng.uniform());
        deltas.push_back({std::move(dc), std::move(dl), std::move(du)});
    }

    // Bound shifts must keep every box nonempty with the sigma margin:
    // halve them until they do, dropping them entirely as a last resort.
    double scale = 1.0;
    for (int attempt = 0; attempt <= 40; ++attempt) {
        const bool last_resort = attempt == 40;
        if (last_resort) scale = 0.0;
        bool feasible = true;
        for (int k = 0; k < m && feasible; ++k) {
            const PlayerSpec& p = spec.player(k);
            const Perturbation::PlayerPart& b = base.player(k);
            const BoundDelta& d = deltas[static_cast<std::size_t>(k)];
            for (int i = 0; i < p.lower_bound.size(); ++i) {
                const double lo = p.lower_bound[i] + b.e_lower[i] + scale * d.lower[i];
                const double hi = p.upper_bound[i] + b.e_upper[i] + scale * d.upper[i];
                if (lo + base.sigma() > hi) {
                    feasible = false;
                    break;
                }
            }
        }
        if (feasible) break;
        scale *= 0.5;
    }

    std::vector<Perturbation::PlayerPart> parts;
    parts.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const Perturbation::PlayerPart& b = base.player(k);
        const BoundDelta& d = deltas[static_cast<std::size_t>(k)];
        parts.push_back({b.e_cost + d.cost, b.e_lower + d.lower * scale,
                         b.e_upper + d.upper * scale});
    }
    return Perturbation(spec, base.e_state() + e_state_delta, std::move(parts), base.sigma());
}

std::uint64_t sample_seed(std::uint64_t seed, int index) {
    return seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1));
}

int resolve_threads(int requested, int n_samples) {
    int t = requested > 0 ? requested
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    return std::min(t, std::max(1, n_samples));
}

struct ModuliFit {
    double kappa_hat = 0.0;
    double ell_hat = 0.0;
    double lip_pass_rate = 0.0;
};

double slack_model(double kappa, double residual_tolerance, double penalty_floor) {
    return 1e-12 + 8.0 * kappa * residual_tolerance / penalty_floor;
}

ModuliFit fit_moduli(const std::vector<PerturbationSample>& samples,
                     double residual_tolerance, double penalty_floor) {
    ModuliFit best;
    if (samples.empty()) return best;

    for (int step = 0; step <= 240; ++step) {
        const double kappa = std::pow(10.0, -6.0 + 0.05 * step);
        const double slack = slack_model(kappa, residual_tolerance, penalty_floor);
        double ell = 0.0;
        for (const PerturbationSample& s : samples) {
            if (s.d_param > kTinyParam) {
                ell = std::max(ell, (s.lip_lhs(kappa) - s.d_tilt) / s.d_param);
            }
        }
        int passed = 0;
        for (const PerturbationSample& s : samples) {
            const double rhs = s.d_tilt + ell * s.d_param;
            if (s.lip_lhs(kappa) <= rhs + slack) ++passed;
        }
        const double rate = static_cast<double>(passed) / static_cast<double>(samples.size());
        if (rate > best.lip_pass_rate ||
            (rate == best.lip_pass_rate && rate == 1.0 && kappa > best.kappa_hat)) {
            best = {kappa, ell, rate};
        }
    }
    if (best.lip_pass_rate < 1.0) {
        // keep the best-rate diagnostics but do not report a certified kappa
        best.kappa_hat = 0.0;
    }
    return best;
}

}  // namespace

StabilityReport run_harness(const GameSpec& spec, const Perturbation& base_e,
                            const TiltVector& base_t, const HarnessSettings& settings) {
    settings.validate();

    EquilibriumResult base = solve_equilibrium(spec, base_e, base_t, settings.solver);
    if (!base.converged) {
        throw SolverError("run_harness: base equilibrium did not converge", base.residual);
    }

    const int n = settings.n_samples;
    std::vector<std::optional<PerturbationSample>> slots(static_cast<std::size_t>(n));
    std::atomic<int> cursor{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (first_error) return;
            }
            const int i = cursor.fetch_add(1);
            if (i >= n) return;
            try {
                Rng rng(sample_seed(settings.seed, i));
                TiltVector t1 = draw_tilt(rng, spec, base_t, settings.radius_tilt);
                Perturbation e1 = draw_perturbation(rng, spec, base_e, settings.radius_param);
                TiltVector t2 = draw_tilt(rng, spec, base_t, settings.radius_tilt);
                Perturbation e2 = draw_perturbation(rng, spec, base_e, settings.radius_param);

                EquilibriumResult s1 =
                    solve_equilibrium(spec, e1, t1, settings.solver, base.u_bar);
                EquilibriumResult s2 =
                    solve_equilibrium(spec, e2, t2, settings.solver, base.u_bar);
                if (!s1.converged || !s2.converged) continue;  // dropped

                std::vector<GridFunction> td;
                for (int k = 0; k < spec.player_count(); ++k) td.push_back(t1[k] - t2[k]);
                ControlProfile tilt_diff(std::move(td));
                ControlProfile sol_diff = s1.u_bar - s2.u_bar;

                const double d_u = l2_norm(sol_diff);
                const double d_tilt = l2_norm(tilt_diff);
                const double d_param = Perturbation::distance(e1, e2);
                const double denom_lip = d_tilt + d_param;
                const double denom_h = d_tilt + std::sqrt(d_param);

                slots[static_cast<std::size_t>(i)] = PerturbationSample{
                    i,
                    std::move(t1),
                    std::move(t2),
                    std::move(e1),
                    std::move(e2),
                    std::move(s1),
                    std::move(s2),
                    std::move(tilt_diff),
                    std::move(sol_diff),
                    d_u,
                    d_tilt,
                    d_param,
                    denom_lip > 0.0 ? d_u / denom_lip : 0.0,
                    denom_h > 0.0 ? d_u / denom_h : 0.0};
            } catch (const SolverError&) {
                // dropped sample; slot stays empty
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int n_threads = resolve_threads(settings.threads, n);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    StabilityReport report;
    report.n_requested = n;
    report.residual_tolerance = settings.solver.residual_tolerance;
    report.min_penalty_floor = spec.min_penalty_floor();
    for (auto& slot : slots) {
        if (slot) {
            report.samples.push_back(std::move(*slot));
        } else {
            ++report.n_dropped;
        }
    }
    if (n > 0 &&
        static_cast<double>(report.n_dropped) > settings.drop_limit * static_cast<double>(n)) {
        throw SolverError("run_harness: dropped sample fraction exceeds the limit",
                          static_cast<double>(report.n_dropped) / static_cast<double>(n));
    }

    const ModuliFit fit =
        fit_moduli(report.samples, report.residual_tolerance, report.min_penalty_floor);
    report.kappa_hat = fit.kappa_hat;
    report.ell_hat = fit.ell_hat;
    report.lip_pass_rate = fit.lip_pass_rate;

    // Hoelder companion at the fitted kappa.
    const double kappa = report.kappa_hat;
    const double slack =
        slack_model(kappa, report.residual_tolerance, report.min_penalty_floor);
    double ell_h = 0.0;
    for (const PerturbationSample& s : report.samples) {
        if (s.d_param > kTinyParam) {
            ell_h = std::max(ell_h, (s.lip_lhs(kappa) - s.d_tilt) / std::sqrt(s.d_param));
        }
    }
    report.ell_hat_holder = ell_h;
    int holder_passed = 0;
    for (const PerturbationSample& s : report.samples) {
        const double lhs = s.lip_lhs(kappa);
        const double lip_rhs = s.d_tilt + report.ell_hat * s.d_param;
        const double holder_rhs = s.d_tilt + ell_h * std::sqrt(s.d_param);
        report.worst_lip_violation = std::max(report.worst_lip_violation, lhs - lip_rhs);
        report.worst_holder_violation =
            std::max(report.worst_holder_violation, lhs - holder_rhs);
        if (lhs <= holder_rhs + slack) ++holder_passed;
    }
    report.holder_pass_rate =
        report.samples.empty()
            ? 0.0
            : static_cast<double>(holder_passed) / static_cast<double>(report.samples.size());
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void export_report(const StabilityReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("export_report: cannot open '" + path + "' for writing");
    }
    out << "sample,d_tilt,d_param,d_u,lip_lhs,lip_rhs,holder_rhs\n";
    for (const PerturbationSample& s : report.samples) {
        const double lhs = s.lip_lhs(report.kappa_hat);
        const double lip_rhs = s.d_tilt + report.ell_hat * s.d_param;
        const double holder_rhs = s.d_tilt + report.ell_hat_holder * std::sqrt(s.d_param);
        out << s.index << ',' << fmt(s.d_tilt) << ',' << fmt(s.d_param) << ',' << fmt(s.d_u)
            << ',' << fmt(lhs) << ',' << fmt(lip_rhs) << ',' << fmt(holder_rhs) << '\n';
    }
    out << "summary," << fmt(report.kappa_hat) << ',' << fmt(report.ell_hat) << ','
        << fmt(report.ell_hat_holder) << ',' << fmt(report.lip_pass_rate) << ','
        << fmt(report.holder_pass_rate) << ',' << report.n_dropped << '\n';
    if (!out.good()) {
        throw std::runtime_error("export_report: write to '" + path + "' failed");
    }
}

}  // namespace nashpde
