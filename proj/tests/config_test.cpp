#include "nashpde/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "nashpde/errors.hpp"

namespace nashpde {
namespace {

const char* kMinimal = R"({
  "grid": {"dim": 1, "extents": [[0.0, 1.0]], "points": [17]},
  "f": "0",
  "players": [{"L": "0", "alpha": -1.0, "beta": 1.0}]
})";

std::string with_replacement(const std::string& base, const std::string& from,
                             const std::string& to) {
    std::string s = base;
    s.replace(s.find(from), from.size(), to);
    return s;
}

TEST(Config, MinimalParsesWithDefaults) {
    const Config cfg = parse_config(kMinimal);
    EXPECT_EQ(cfg.game.player_count(), 1);
    EXPECT_EQ(cfg.game.grid().dim(), 1);
    EXPECT_DOUBLE_EQ(cfg.game.player(0).penalty_floor, 1.0);  // zeta defaults to 1
    EXPECT_EQ(cfg.solver.method, EquilibriumMethod::ProjectedFixedPoint);
    EXPECT_DOUBLE_EQ(cfg.solver.residual_tolerance, 1e-9);
    EXPECT_EQ(cfg.solver.max_outer_iters, 5000);
    EXPECT_DOUBLE_EQ(cfg.solver.newton.abs_tolerance, 1e-11);
    EXPECT_DOUBLE_EQ(cfg.solver.newton.linear.rel_tolerance, 1e-12);
    EXPECT_DOUBLE_EQ(cfg.certify_delta, 1e-8);
    EXPECT_EQ(cfg.harness.n_samples, 50);
    EXPECT_DOUBLE_EQ(cfg.harness.radius_tilt, 1e-2);
    EXPECT_DOUBLE_EQ(cfg.perturbation.sigma(), 1e-6);
}

TEST(Config, FullDocumentParses) {
    const char* text = R"({
      "grid": {"dim": 2, "extents": [[0.0, 1.0], [0.0, 2.0]], "points": [9, 11]},
      "operator": {"a11": 1.0, "a12": 0.2, "a22": 1.5},
      "f": "y^3",
      "players": [
        {"L": "0.5*(y - yd)^2", "yd": "sin(3.14159*x1)*x2", "zeta": 2.0,
         "zeta_floor": 2.0, "B": "1 + x1/2", "alpha": -1.0, "beta": "1 + x2"}
      ],
      "perturbation": {"e_Y": "x1/10", "players": [{"e_J": 0.01, "e_alpha": 0.0, "e_beta": 0.0}],
                       "sigma": 1e-4},
      "tilt": ["x1/5"],
      "solver": {"method": "gauss-seidel-best-response", "tau": 0.5,
                 "residual_tolerance": 1e-8, "max_outer_iters": 100,
                 "newton": {"abs_tolerance": 1e-10, "max_iters": 30, "max_halvings": 10},
                 "linear": {"rel_tolerance": 1e-11, "max_iters": 500}},
      "certify": {"delta": 1e-6, "eps_act": 1e-5},
      "harness": {"samples": 12, "radius_tilt": 0.5e-2, "radius_param": 0.25e-2, "seed": 42}
    })";
    const Config cfg = parse_config(text);
    EXPECT_EQ(cfg.game.grid().dim(), 2);
    EXPECT_EQ(cfg.solver.method, EquilibriumMethod::GaussSeidelBestResponse);
    EXPECT_DOUBLE_EQ(cfg.solver.tau, 0.5);
    EXPECT_EQ(cfg.solver.newton.max_iters, 30);
    EXPECT_DOUBLE_EQ(cfg.certify_delta, 1e-6);
    EXPECT_DOUBLE_EQ(cfg.certify_eps_act, 1e-5);
    EXPECT_EQ(cfg.harness.n_samples, 12);
    EXPECT_EQ(cfg.harness.seed, 42u);
    EXPECT_GT(cfg.perturbation.norm(), 0.0);
}

TEST(Config, UnknownKeysRejectedEverywhere) {
    EXPECT_THROW(parse_config(R"({"grid": {"dim": 1, "extents": [[0,1]], "points": [9]},
      "f": "0", "players": [{"L": "0", "alpha": -1, "beta": 1}], "bogus": 1})"),
                 ConfigError);
    EXPECT_THROW(parse_config(R"({"grid": {"dim": 1, "extents": [[0,1]], "points": [9],
      "charm": 3}, "f": "0", "players": [{"L": "0", "alpha": -1, "beta": 1}]})"),
                 ConfigError);
    EXPECT_THROW(parse_config(R"({"grid": {"dim": 1, "extents": [[0,1]], "points": [9]},
      "f": "0", "players": [{"L": "0", "alpha": -1, "beta": 1, "gamma": 2}]})"),
                 ConfigError);
}

TEST(Config, ErrorsNameTheOffendingKey) {
    try {
        parse_config(R"({"grid": {"dim": 1, "extents": [[0,1]], "points": [9]},
          "f": "0", "players": [{"L": "0", "alpha": 1.0, "beta": -1.0}]})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
    }

    try {
        parse_config(with_replacement(kMinimal, "\"L\": \"0\"",
                                      "\"L\": \"0\", \"zeta\": -2.0"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("zeta"), std::string::npos);
    }
}

TEST(Config, MonotonicityViolationRejected) {
    try {
        parse_config(with_replacement(kMinimal, "\"f\": \"0\"", "\"f\": \"-y\""));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("df/dy"), std::string::npos);
    }
}

TEST(Config, ExpressionErrorsSurfaceWithKey) {
    try {
        parse_config(with_replacement(kMinimal, "\"f\": \"0\"", "\"f\": \"z + 1\""));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("'f'"), std::string::npos);
        EXPECT_NE(what.find("identifier"), std::string::npos);
    }
    // spatial fields cannot reference the state
    EXPECT_THROW(parse_config(with_replacement(kMinimal, "\"alpha\": -1.0",
                                               "\"alpha\": \"y\"")),
                 ConfigError);
    // x2 is invalid on a 1D grid
    EXPECT_THROW(parse_config(with_replacement(kMinimal, "\"alpha\": -1.0",
                                               "\"alpha\": \"x2\"")),
                 ConfigError);
}

TEST(Config, CountMismatchesRejected) {
    EXPECT_THROW(parse_config(with_replacement(
                     kMinimal, "\"players\": [{\"L\": \"0\", \"alpha\": -1.0, \"beta\": 1.0}]",
                     "\"players\": [{\"L\": \"0\", \"alpha\": -1.0, \"beta\": 1.0}], "
                     "\"tilt\": [0.0, 0.0]")),
                 ConfigError);
    EXPECT_THROW(parse_config(R"({"grid": {"dim": 1, "extents": [[0,1]], "points": [9, 9]},
      "f": "0", "players": [{"L": "0", "alpha": -1, "beta": 1}]})"),
                 ConfigError);
}

TEST(Config, PerturbationFeasibilityValidated) {
    const char* text = R"({
      "grid": {"dim": 1, "extents": [[0.0, 1.0]], "points": [9]},
      "f": "0",
      "players": [{"L": "0", "alpha": -1.0, "beta": 1.0}],
      "perturbation": {"players": [{"e_alpha": 3.0, "e_beta": 0.0}], "sigma": 1e-6}
    })";
    EXPECT_THROW(parse_config(text), ConfigError);
}

TEST(Config, HashStableUnderWhitespaceEdits) {
    const Config a = parse_config(kMinimal);
    const std::string spaced = with_replacement(
        std::string(kMinimal), "\"f\": \"0\"", "\"f\":     \"0\"");
    const Config b = parse_config(spaced + "\n\n  ");
    EXPECT_EQ(a.config_hash, b.config_hash);

    const Config c =
        parse_config(with_replacement(kMinimal, "\"beta\": 1.0", "\"beta\": 2.0"));
    EXPECT_NE(a.config_hash, c.config_hash);
}

TEST(Config, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "nashpde_cfg.json";
    {
        std::ofstream out(path);
        out << kMinimal;
    }
    const Config cfg = load_config_file(path.string());
    EXPECT_EQ(cfg.game.player_count(), 1);
    std::filesystem::remove(path);
    EXPECT_THROW(load_config_file(path.string()), ConfigError);
}

}  // namespace
}  // namespace nashpde
