#pragma once

#include <cstdint>
#include <string>

#include "nashpde/perturb.hpp"
#include "nashpde/stability.hpp"

namespace nashpde {

inline constexpr const char* kVersion = "0.1.0";

/// Everything a run needs, built and validated from one JSON document.
/// Unknown keys are rejected; every module invariant violation surfaces as
/// a ConfigError naming the offending key.
struct Config {
    GameSpec game;
    Perturbation perturbation;
    TiltVector tilt;
    SolverSettings solver;
    double certify_delta;
    double certify_eps_act;  // 0 = scale-aware default
    HarnessSettings harness;
    std::uint64_t config_hash;  // FNV-1a over the canonical parsed tree
};

Config parse_config(const std::string& json_text);
Config load_config_file(const std::string& path);

}  // namespace nashpde
