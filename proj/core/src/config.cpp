#include "nashpde/config.hpp"

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nashpde/errors.hpp"

namespace nashpde {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("config: unknown key '" + section + "." + it.key() + "'");
        }
    }
}

const json& require(const json& obj, const std::string& section, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError("config: missing required key '" + section + "." + key + "'");
    }
    return *it;
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw ConfigError("config: '" + where + "' must be a number");
    }
    return v.get<double>();
}

int as_int(const json& v, const std::string& where) {
    if (!v.is_number_integer()) {
        throw ConfigError("config: '" + where + "' must be an integer");
    }
    return v.get<int>();
}

Expr parse_expression(const std::string& text, const std::string& where) {
    try {
        return Expr::parse(text);
    } catch (const DomainError& e) {
        throw ConfigError("config: '" + where + "': " + e.what());
    }
}

/// A field given either as a constant or as a spatial expression in x1/x2.
GridFunction spatial_field(const json& v, const std::string& where, const Grid& grid) {
    if (v.is_number()) {
        return GridFunction::constant(grid, v.get<double>());
    }
    if (!v.is_string()) {
        throw ConfigError("config: '" + where + "' must be a number or an expression string");
    }
    const Expr e = parse_expression(v.get<std::string>(), where);
    if (e.uses_y() || e.uses_yd()) {
        throw ConfigError("config: '" + where + "' must be spatial (no y or yd)");
    }
    if (e.uses_x2() && grid.dim() < 2) {
        throw ConfigError("config: '" + where + "' references x2 on a 1D grid");
    }
    try {
        return sample_spatial(e, grid);
    } catch (const DomainError& err) {
        throw ConfigError("config: '" + where + "': " + err.what());
    }
}

GridFunction spatial_field_or(const json& obj, const std::string& section, const char* key,
                              const Grid& grid, double fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return GridFunction::constant(grid, fallback);
    return spatial_field(*it, section + "." + key, grid);
}

Grid parse_grid(const json& doc) {
    const json& g = require(doc, "", "grid");
    check_keys(g, "grid", {"dim", "extents", "points"});
    const int dim = as_int(require(g, "grid", "dim"), "grid.dim");
    if (dim != 1 && dim != 2) {
        throw ConfigError("config: 'grid.dim' must be 1 or 2");
    }
    const json& extents = require(g, "grid", "extents");
    const json& points = require(g, "grid", "points");
    if (!extents.is_array() || static_cast<int>(extents.size()) != dim) {
        throw ConfigError("config: 'grid.extents' must be an array of dim [a, b] pairs");
    }
    if (!points.is_array() || static_cast<int>(points.size()) != dim) {
        throw ConfigError("config: 'grid.points' must be an array of dim integers");
    }
    std::vector<double> lo(2, 0.0), hi(2, 0.0);
    std::vector<int> n(2, 0);
    for (int axis = 0; axis < dim; ++axis) {
        const json& pair = extents[static_cast<std::size_t>(axis)];
        if (!pair.is_array() || pair.size() != 2) {
            throw ConfigError("config: 'grid.extents' entries must be [a, b] pairs");
        }
        lo[axis] = as_number(pair[0], "grid.extents");
        hi[axis] = as_number(pair[1], "grid.extents");
        n[axis] = as_int(points[static_cast<std::size_t>(axis)], "grid.points");
        if (n[axis] < 3) {
            throw ConfigError("config: 'grid.points' entries must be >= 3");
        }
        if (!(hi[axis] > lo[axis])) {
            throw ConfigError("config: 'grid.extents' must satisfy a < b");
        }
    }
    try {
        return dim == 1 ? Grid::line(lo[0], hi[0], n[0])
                        : Grid::box(lo[0], hi[0], n[0], lo[1], hi[1], n[1]);
    } catch (const StructuralError& e) {
        throw ConfigError(std::string("config: grid: ") + e.what());
    }
}

EllipticOperator parse_operator(const json& doc, const Grid& grid) {
    double a11 = 1.0, a12 = 0.0, a22 = 1.0;
    if (doc.contains("operator")) {
        const json& op = doc["operator"];
        if (grid.dim() == 1) {
            check_keys(op, "operator", {"a11"});
        } else {
            check_keys(op, "operator", {"a11", "a12", "a22"});
        }
        if (op.contains("a11")) a11 = as_number(op["a11"], "operator.a11");
        if (op.contains("a12")) a12 = as_number(op["a12"], "operator.a12");
        if (op.contains("a22")) a22 = as_number(op["a22"], "operator.a22");
    }
    try {
        return grid.dim() == 1 ? EllipticOperator(grid, a11)
                               : EllipticOperator(grid, a11, a12, a22);
    } catch (const StructuralError& e) {
        throw ConfigError(std::string("config: operator: ") + e.what());
    }
}

PlayerSpec parse_player(const json& p, const std::string& section, const Grid& grid) {
    check_keys(p, section, {"L", "yd", "zeta", "zeta_floor", "B", "alpha", "beta"});
    const json& L = require(p, section, "L");
    if (!L.is_string()) {
        throw ConfigError("config: '" + section + ".L' must be an expression string");
    }
    Expr integrand = parse_expression(L.get<std::string>(), section + ".L");
    if (integrand.uses_x2() && grid.dim() < 2) {
        throw ConfigError("config: '" + section + ".L' references x2 on a 1D grid");
    }

    GridFunction target = spatial_field_or(p, section, "yd", grid, 0.0);
    GridFunction zeta = spatial_field_or(p, section, "zeta", grid, 1.0);
    GridFunction weight = spatial_field_or(p, section, "B", grid, 1.0);
    GridFunction alpha = spatial_field(require(p, section, "alpha"), section + ".alpha", grid);
    GridFunction beta = spatial_field(require(p, section, "beta"), section + ".beta", grid);

    double floor;
    if (p.contains("zeta_floor")) {
        floor = as_number(p["zeta_floor"], section + ".zeta_floor");
    } else {
        floor = zeta[0];
        for (int i = 0; i < zeta.size(); ++i) floor = std::min(floor, zeta[i]);
    }
    if (!(floor > 0.0)) {
        throw ConfigError("config: '" + section +
                          ".zeta' violates the positivity floor: need zeta >= zeta_floor > 0");
    }
    return PlayerSpec{std::move(integrand), std::move(target), std::move(zeta),
                      floor,                std::move(weight), std::move(alpha),
                      std::move(beta)};
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Config parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config: document root must be an object");
    }
    check_keys(doc, "",
               {"grid", "operator", "f", "players", "perturbation", "tilt", "solver",
                "certify", "harness"});

    const Grid grid = parse_grid(doc);
    EllipticOperator op = parse_operator(doc, grid);

    const json& f_node = require(doc, "", "f");
    if (!f_node.is_string()) {
        throw ConfigError("config: 'f' must be an expression string");
    }
    Expr f = parse_expression(f_node.get<std::string>(), "f");

    const json& players_node = require(doc, "", "players");
    if (!players_node.is_array() || players_node.empty()) {
        throw ConfigError("config: 'players' must be a non-empty array");
    }
    std::vector<PlayerSpec> players;
    for (std::size_t k = 0; k < players_node.size(); ++k) {
        players.push_back(
            parse_player(players_node[k], "players[" + std::to_string(k) + "]", grid));
    }
    const int m = static_cast<int>(players.size());

    std::optional<GameSpec> game;
    try {
        game.emplace(std::move(op), std::move(f), std::move(players));
    } catch (const StructuralError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    // perturbation
    double sigma = 1e-6;
    GridFunction e_state(grid);
    std::vector<Perturbation::PlayerPart> parts(
        static_cast<std::size_t>(m),
        Perturbation::PlayerPart{GridFunction(grid), GridFunction(grid), GridFunction(grid)});
    if (doc.contains("perturbation")) {
        const json& pe = doc["perturbation"];
        check_keys(pe, "perturbation", {"e_Y", "players", "sigma"});
        if (pe.contains("sigma")) sigma = as_number(pe["sigma"], "perturbation.sigma");
        if (pe.contains("e_Y")) e_state = spatial_field(pe["e_Y"], "perturbation.e_Y", grid);
        if (pe.contains("players")) {
            const json& pp = pe["players"];
            if (!pp.is_array() || static_cast<int>(pp.size()) != m) {
                throw ConfigError(
                    "config: 'perturbation.players' must list one entry per player");
            }
            for (int k = 0; k < m; ++k) {
                const std::string section = "perturbation.players[" + std::to_string(k) + "]";
                const json& entry = pp[static_cast<std::size_t>(k)];
                check_keys(entry, section, {"e_J", "e_alpha", "e_beta"});
                parts[static_cast<std::size_t>(k)] = Perturbation::PlayerPart{
                    spatial_field_or(entry, section, "e_J", grid, 0.0),
                    spatial_field_or(entry, section, "e_alpha", grid, 0.0),
                    spatial_field_or(entry, section, "e_beta", grid, 0.0)};
            }
        }
    }
    std::optional<Perturbation> perturbation;
    try {
        perturbation.emplace(*game, std::move(e_state), std::move(parts), sigma);
    } catch (const StructuralError& e) {
        throw ConfigError(std::string("config: perturbation: ") + e.what());
    }

    // tilt
    std::vector<GridFunction> tilts(static_cast<std::size_t>(m), GridFunction(grid));
    if (doc.contains("tilt")) {
        const json& tl = doc["tilt"];
        if (!tl.is_array() || static_cast<int>(tl.size()) != m) {
            throw ConfigError("config: 'tilt' must list one entry per player");
        }
        for (int k = 0; k < m; ++k) {
            tilts[static_cast<std::size_t>(k)] = spatial_field(
                tl[static_cast<std::size_t>(k)], "tilt[" + std::to_string(k) + "]", grid);
        }
    }

    // solver
    SolverSettings solver;
    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        check_keys(s, "solver",
                   {"method", "tau", "residual_tolerance", "max_outer_iters", "newton",
                    "linear"});
        if (s.contains("method")) {
            const std::string method = s["method"].get<std::string>();
            if (method == "projected-fixed-point") {
                solver.method = EquilibriumMethod::ProjectedFixedPoint;
            } else if (method == "gauss-seidel-best-response") {
                solver.method = EquilibriumMethod::GaussSeidelBestResponse;
            } else {
                throw ConfigError("config: 'solver.method' must be 'projected-fixed-point' "
                                  "or 'gauss-seidel-best-response'");
            }
        }
        if (s.contains("tau")) solver.tau = as_number(s["tau"], "solver.tau");
        if (s.contains("residual_tolerance")) {
            solver.residual_tolerance =
                as_number(s["residual_tolerance"], "solver.residual_tolerance");
        }
        if (s.contains("max_outer_iters")) {
            solver.max_outer_iters = as_int(s["max_outer_iters"], "solver.max_outer_iters");
        }
        if (s.contains("newton")) {
            const json& nw = s["newton"];
            check_keys(nw, "solver.newton", {"abs_tolerance", "max_iters", "max_halvings"});
            if (nw.contains("abs_tolerance")) {
                solver.newton.abs_tolerance =
                    as_number(nw["abs_tolerance"], "solver.newton.abs_tolerance");
            }
            if (nw.contains("max_iters")) {
                solver.newton.max_iters = as_int(nw["max_iters"], "solver.newton.max_iters");
            }
            if (nw.contains("max_halvings")) {
                solver.newton.max_halvings =
                    as_int(nw["max_halvings"], "solver.newton.max_halvings");
            }
        }
        if (s.contains("linear")) {
            const json& ln = s["linear"];
            check_keys(ln, "solver.linear", {"rel_tolerance", "max_iters"});
            if (ln.contains("rel_tolerance")) {
                solver.newton.linear.rel_tolerance =
                    as_number(ln["rel_tolerance"], "solver.linear.rel_tolerance");
            }
            if (ln.contains("max_iters")) {
                solver.newton.linear.max_iters =
                    as_int(ln["max_iters"], "solver.linear.max_iters");
            }
        }
    }
    try {
        solver.validate();
    } catch (const StructuralError& e) {
        throw ConfigError(std::string("config: solver: ") + e.what());
    }

    // certify
    double delta = 1e-8;
    double eps_act = 0.0;
    if (doc.contains("certify")) {
        const json& c = doc["certify"];
        check_keys(c, "certify", {"delta", "eps_act"});
        if (c.contains("delta")) delta = as_number(c["delta"], "certify.delta");
        if (c.contains("eps_act")) eps_act = as_number(c["eps_act"], "certify.eps_act");
        if (!(delta > 0.0)) throw ConfigError("config: 'certify.delta' must be > 0");
        if (eps_act < 0.0) throw ConfigError("config: 'certify.eps_act' must be >= 0");
    }

    // harness
    HarnessSettings harness;
    harness.solver = solver;
    if (doc.contains("harness")) {
        const json& h = doc["harness"];
        check_keys(h, "harness", {"samples", "radius_tilt", "radius_param", "seed"});
        if (h.contains("samples")) harness.n_samples = as_int(h["samples"], "harness.samples");
        if (h.contains("radius_tilt")) {
            harness.radius_tilt = as_number(h["radius_tilt"], "harness.radius_tilt");
        }
        if (h.contains("radius_param")) {
            harness.radius_param = as_number(h["radius_param"], "harness.radius_param");
        }
        if (h.contains("seed")) {
            if (!h["seed"].is_number_integer()) {
                throw ConfigError("config: 'harness.seed' must be an integer");
            }
            harness.seed = h["seed"].get<std::uint64_t>();
        }
    }
    try {
        harness.validate();
    } catch (const StructuralError& e) {
        throw ConfigError(std::string("config: harness: ") + e.what());
    }

    const std::uint64_t hash = fnv1a(doc.dump());

    return Config{std::move(*game), std::move(*perturbation),
                  TiltVector(std::move(tilts)), solver,
                  delta,            eps_act,
                  harness,          hash};
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace nashpde
