#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nashpde/config.hpp"
#include "nashpde/errors.hpp"
#include "nashpde/perturb.hpp"
#include "nashpde/rng.hpp"
#include "nashpde/stability.hpp"

namespace {

using namespace nashpde;

constexpr int kExitOk = 0;
constexpr int kExitAnalysisFailure = 1;
constexpr int kExitConfigError = 2;

std::string fmt(double v, const char* format = "%.9g") {
    char buf[48];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

/// Header common to every subcommand: config identity, tool version, seed.
struct RunReport {
    std::uint64_t config_hash;
    std::uint64_t seed;
    bool with_seed;

    void print() const {
        char hash[24];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(config_hash));
        std::cout << "nashpde " << kVersion << " config=" << hash;
        if (with_seed) std::cout << " seed=" << seed;
        std::cout << "\n";
    }
};

double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

ControlProfile embed_direction(const GameSpec& spec, int k, const GridFunction& h) {
    std::vector<GridFunction> parts(static_cast<std::size_t>(spec.player_count()),
                                    GridFunction(spec.grid()));
    parts[static_cast<std::size_t>(k)] = h;
    return ControlProfile(std::move(parts));
}

// ---------------------------------------------------------------------------
// check: finite-difference validation of the derivative formulas and the
// discrete adjoint identity on the configured instance.
// ---------------------------------------------------------------------------

int cmd_check(const Config& cfg) {
    const GameSpec& spec = cfg.game;
    const Perturbation& e = cfg.perturbation;
    const TiltVector& t = cfg.tilt;
    const NewtonSettings& newton = cfg.solver.newton;

    constexpr double kGradTol = 1e-6;
    constexpr double kHessTol = 1e-5;
    constexpr double kAdjointTol = 1e-10;
    constexpr double kGradEps = 1e-5;
    constexpr double kHessEps = 1e-4;
    constexpr int kDirections = 10;

    const ControlProfile u0 = project_admissible(spec, e, ControlProfile::zero(spec));
    const EquilibriumPoint pt = evaluate_point(spec, u0, e, newton);

    Rng rng(0xc0ffeeULL);
    bool all_pass = true;

    for (int k = 0; k < spec.player_count(); ++k) {
        const GridFunction grad_k = gradient(spec, pt, k);
        double worst = 0.0;
        for (int d = 0; d < kDirections; ++d) {
            const GridFunction h = random_field(rng, spec.grid(), -1.0, 1.0);
            const ControlProfile dir = embed_direction(spec, k, h);
            const double plus = cost(spec, k, u0 + dir * kGradEps, e, t, newton);
            const double minus = cost(spec, k, u0 - dir * kGradEps, e, t, newton);
            const double fd = (plus - minus) / (2.0 * kGradEps);
            const double analytic = inner_product(grad_k, h) - inner_product(t[k], h);
            worst = std::max(worst, rel_err(fd, analytic));
        }
        const bool pass = worst <= kGradTol;
        all_pass = all_pass && pass;
        std::cout << "check gradient player=" << (k + 1) << " rel_error=" << fmt(worst)
                  << " tol=" << fmt(kGradTol) << (pass ? " pass" : " FAIL") << "\n";
    }

    for (int k = 0; k < spec.player_count(); ++k) {
        double worst = 0.0;
        for (int j = 0; j < spec.player_count(); ++j) {
            const GridFunction h_j = random_field(rng, spec.grid(), -1.0, 1.0);
            const GridFunction h_k = random_field(rng, spec.grid(), -1.0, 1.0);
            const GridFunction block = hessian_block_apply(spec, pt, k, j, h_j, newton.linear);
            const double analytic = inner_product(block, h_k);

            const ControlProfile dir = embed_direction(spec, j, h_j);
            const EquilibriumPoint pt_plus =
                evaluate_point(spec, u0 + dir * kHessEps, e, newton);
            const EquilibriumPoint pt_minus =
                evaluate_point(spec, u0 - dir * kHessEps, e, newton);
            const double g_plus = inner_product(gradient(spec, pt_plus, k), h_k);
            const double g_minus = inner_product(gradient(spec, pt_minus, k), h_k);
            const double fd = (g_plus - g_minus) / (2.0 * kHessEps);
            worst = std::max(worst, rel_err(fd, analytic));
        }
        const bool pass = worst <= kHessTol;
        all_pass = all_pass && pass;
        std::cout << "check hessian player=" << (k + 1) << " rel_error=" << fmt(worst)
                  << " tol=" << fmt(kHessTol) << (pass ? " pass" : " FAIL") << "\n";
    }

    for (int k = 0; k < spec.player_count(); ++k) {
        const PlayerSpec& player = spec.player(k);
        const GridFunction source =
            evaluate_integrand(player.integrand.diff_y(), pt.state, player.target) +
            e.player(k).e_cost;
        const GridFunction v = random_field(rng, spec.grid(), -1.0, 1.0);
        const GridFunction z = solve_linearized(spec.op(), spec.f(), pt.state, v, newton.linear);
        const double lhs = inner_product(pt.adjoints[static_cast<std::size_t>(k)], v);
        const double rhs = inner_product(source, z);
        const double scale = std::max({l2_norm(source) * l2_norm(z), std::abs(lhs), 1e-12});
        const double err = std::abs(lhs - rhs) / scale;
        const bool pass = err <= kAdjointTol;
        all_pass = all_pass && pass;
        std::cout << "check adjoint player=" << (k + 1) << " rel_error=" << fmt(err)
                  << " tol=" << fmt(kAdjointTol) << (pass ? " pass" : " FAIL") << "\n";
    }

    std::cout << (all_pass ? "check PASS" : "check FAIL") << "\n";
    return all_pass ? kExitOk : kExitAnalysisFailure;
}

// ---------------------------------------------------------------------------
// equilibrium
// ---------------------------------------------------------------------------

void write_controls_csv(const GameSpec& spec, const ControlProfile& u,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    const Grid& grid = spec.grid();
    out << "x1";
    if (grid.dim() == 2) out << ",x2";
    for (int k = 0; k < spec.player_count(); ++k) out << ",u_" << (k + 1);
    out << "\n";
    for (int i = 0; i < grid.interior_count(); ++i) {
        const auto x = grid.node(i);
        out << fmt(x[0], "%.17g");
        if (grid.dim() == 2) out << ',' << fmt(x[1], "%.17g");
        for (int k = 0; k < spec.player_count(); ++k) out << ',' << fmt(u[k][i], "%.17g");
        out << "\n";
    }
    if (!out.good()) {
        throw std::runtime_error("write to '" + path + "' failed");
    }
}

void write_iteration_log(const std::vector<IterationRecord>& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << "iter,residual\n";
    for (const IterationRecord& rec : log) {
        out << rec.iteration << ',' << fmt(rec.residual, "%.17g") << "\n";
    }
}

int cmd_equilibrium(const Config& cfg, const SolverSettings& solver,
                    const std::string& out_path, const std::string& log_path) {
    const GameSpec& spec = cfg.game;
    std::vector<IterationRecord> log;
    EquilibriumResult result = solve_equilibrium(spec, cfg.perturbation, cfg.tilt, solver,
                                                 std::nullopt, log_path.empty() ? nullptr : &log);
    if (!log_path.empty()) {
        write_iteration_log(log, log_path);
    }

    std::cout << "equilibrium converged=" << (result.converged ? "true" : "false")
              << " iterations=" << result.iterations
              << " residual=" << fmt(result.residual) << "\n";
    for (int k = 0; k < spec.player_count(); ++k) {
        std::cout << "player " << (k + 1)
                  << " grad_norm=" << fmt(l2_norm(gradient(spec, result.point, k))) << "\n";
    }
    const NormalConeReport nc = check_variational_equilibrium(spec, result);
    std::cout << "normal_cone worst_violation=" << fmt(nc.worst_violation)
              << (nc.all_pass ? " pass" : " FAIL") << "\n";

    if (!out_path.empty()) {
        write_controls_csv(spec, result.u_bar, out_path);
    }
    return result.converged ? kExitOk : kExitAnalysisFailure;
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

int cmd_certify(const Config& cfg, double delta, double eps_act) {
    const GameSpec& spec = cfg.game;
    EquilibriumResult result = solve_equilibrium(spec, cfg.perturbation, cfg.tilt, cfg.solver);
    std::cout << "equilibrium converged=" << (result.converged ? "true" : "false")
              << " iterations=" << result.iterations
              << " residual=" << fmt(result.residual) << "\n";
    if (!result.converged) {
        return kExitAnalysisFailure;
    }

    CertifyOptions options;
    options.linear = cfg.solver.newton.linear;
    const StabilityCertificate cert = certify(spec, result, delta, eps_act, options);
    for (int k = 0; k < spec.player_count(); ++k) {
        std::cout << "player " << (k + 1) << " fixed=" << cert.mask.fixed_count(k)
                  << " free=" << cert.mask.free_count(k) << "\n";
    }
    if (cert.mask.free_count() == 0) {
        std::cout << "free set empty (positivity is vacuous)\n";
    }
    std::cout << "lambda_min=" << fmt(cert.lambda_min)
              << " delta=" << fmt(cert.delta)
              << " eps_act=" << fmt(cert.mask.eps_act)
              << " verdict=" << to_string(cert.verdict) << "\n";
    if (cert.witness) {
        std::cout << "witness_norm=" << fmt(l2_norm(*cert.witness)) << "\n";
    }
    if (!cert.diagnostic.empty()) {
        std::cout << "diagnostic: " << cert.diagnostic << "\n";
    }
    return cert.verdict == StabilityVerdict::FullyStable ? kExitOk : kExitAnalysisFailure;
}

// ---------------------------------------------------------------------------
// perturb
// ---------------------------------------------------------------------------

int resolve_env_threads() {
    const char* env = std::getenv("NASHPDE_THREADS");
    if (!env) return 0;
    const int v = std::atoi(env);
    return v > 0 ? v : 0;
}

int cmd_perturb(const Config& cfg, const HarnessSettings& harness,
                const std::string& out_path) {
    const StabilityReport report = run_harness(cfg.game, cfg.perturbation, cfg.tilt, harness);
    std::cout << "harness samples=" << static_cast<int>(report.samples.size())
              << " dropped=" << report.n_dropped << "\n";
    std::cout << "kappa_hat=" << fmt(report.kappa_hat)
              << " ell_hat=" << fmt(report.ell_hat)
              << " ell_hat_holder=" << fmt(report.ell_hat_holder) << "\n";
    std::cout << "lip_pass_rate=" << fmt(report.lip_pass_rate)
              << " holder_pass_rate=" << fmt(report.holder_pass_rate) << "\n";
    std::cout << "worst_lip_violation=" << fmt(report.worst_lip_violation)
              << " worst_holder_violation=" << fmt(report.worst_holder_violation) << "\n";
    if (!out_path.empty()) {
        export_report(report, out_path);
    }
    return report.lip_pass_rate == 1.0 ? kExitOk : kExitAnalysisFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nash equilibria of PDE-governed games: solve, certify full "
                 "stability, and probe it empirically"};
    app.require_subcommand(1);

    std::string config_path;

    auto* check = app.add_subcommand("check", "validate derivative formulas by finite differences");
    check->add_option("config", config_path, "JSON configuration file")->required();

    std::string eq_method;
    double eq_tol = -1.0;
    int eq_max_iters = -1;
    std::string eq_out;
    std::string eq_log;
    auto* equilibrium = app.add_subcommand("equilibrium", "solve for a variational Nash equilibrium");
    equilibrium->add_option("config", config_path, "JSON configuration file")->required();
    equilibrium->add_option("--method", eq_method,
                            "projected-fixed-point | gauss-seidel-best-response");
    equilibrium->add_option("--tol", eq_tol, "residual tolerance");
    equilibrium->add_option("--max-iters", eq_max_iters, "outer iteration cap");
    equilibrium->add_option("--out", eq_out, "write the controls as CSV");
    equilibrium->add_option("--log", eq_log, "write per-iteration residuals as CSV");

    double ct_delta = -1.0;
    double ct_eps_act = -1.0;
    auto* certify_cmd = app.add_subcommand("certify", "certify full stability at the equilibrium");
    certify_cmd->add_option("config", config_path, "JSON configuration file")->required();
    certify_cmd->add_option("--delta", ct_delta, "certification margin");
    certify_cmd->add_option("--eps-act", ct_eps_act, "activity threshold (0 = scale-aware)");

    int pb_samples = -1;
    double pb_radius_tilt = -1.0;
    double pb_radius_param = -1.0;
    std::int64_t pb_seed = -1;
    std::string pb_out;
    auto* perturb_cmd = app.add_subcommand("perturb", "sample perturbations and test the "
                                                      "Lipschitz/Hoelder stability inequalities");
    perturb_cmd->add_option("config", config_path, "JSON configuration file")->required();
    perturb_cmd->add_option("--samples", pb_samples, "number of sample pairs");
    perturb_cmd->add_option("--radius-tilt", pb_radius_tilt, "tilt sampling radius");
    perturb_cmd->add_option("--radius-param", pb_radius_param, "parameter sampling radius");
    perturb_cmd->add_option("--seed", pb_seed, "sampling seed");
    perturb_cmd->add_option("--out", pb_out, "write the sample table as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        const Config cfg = load_config_file(config_path);

        if (app.got_subcommand(check)) {
            RunReport{cfg.config_hash, 0, false}.print();
            return cmd_check(cfg);
        }
        if (app.got_subcommand(equilibrium)) {
            RunReport{cfg.config_hash, 0, false}.print();
            SolverSettings solver = cfg.solver;
            if (!eq_method.empty()) {
                if (eq_method == "projected-fixed-point") {
                    solver.method = EquilibriumMethod::ProjectedFixedPoint;
                } else if (eq_method == "gauss-seidel-best-response") {
                    solver.method = EquilibriumMethod::GaussSeidelBestResponse;
                } else {
                    throw ConfigError("--method must be 'projected-fixed-point' or "
                                      "'gauss-seidel-best-response'");
                }
            }
            if (eq_tol > 0.0) solver.residual_tolerance = eq_tol;
            if (eq_max_iters > 0) solver.max_outer_iters = eq_max_iters;
            return cmd_equilibrium(cfg, solver, eq_out, eq_log);
        }
        if (app.got_subcommand(certify_cmd)) {
            RunReport{cfg.config_hash, 0, false}.print();
            const double delta = ct_delta > 0.0 ? ct_delta : cfg.certify_delta;
            const double eps_act = ct_eps_act >= 0.0 ? ct_eps_act : cfg.certify_eps_act;
            return cmd_certify(cfg, delta, eps_act);
        }
        if (app.got_subcommand(perturb_cmd)) {
            HarnessSettings harness = cfg.harness;
            if (pb_samples >= 0) harness.n_samples = pb_samples;
            if (pb_radius_tilt >= 0.0) harness.radius_tilt = pb_radius_tilt;
            if (pb_radius_param >= 0.0) harness.radius_param = pb_radius_param;
            if (pb_seed >= 0) harness.seed = static_cast<std::uint64_t>(pb_seed);
            harness.threads = resolve_env_threads();
            RunReport{cfg.config_hash, harness.seed, true}.print();
            return cmd_perturb(cfg, harness, pb_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAnalysisFailure;
    }
    return kExitConfigError;
}
