#include "nashpde/game.hpp"

#include <cmath>
#include <string>

#include "nashpde/errors.hpp"

namespace nashpde {

namespace {

// Range and resolution of the df/dy >= 0 sampling check.
constexpr double kMonotonicityYRange = 8.0;
constexpr int kMonotonicityYSamples = 33;
constexpr double kMonotonicityTolerance = -1e-12;

void check_monotone_nonlinearity(const Expr& f, const Grid& grid) {
    const Expr dfdy = f.diff_y();
    const int n = grid.interior_count();
    for (int i = 0; i < n; ++i) {
        const auto x = grid.node(i);
        for (int s = 0; s < kMonotonicityYSamples; ++s) {
            const double y = -kMonotonicityYRange +
                             2.0 * kMonotonicityYRange * s / (kMonotonicityYSamples - 1);
            if (dfdy.eval(x[0], x[1], y, 0.0) < kMonotonicityTolerance) {
                throw StructuralError(
                    "GameSpec: f violates the monotonicity requirement df/dy >= 0 "
                    "(sampled df/dy < 0 at y = " + std::to_string(y) + ")");
            }
        }
    }
}

}  // namespace

void PlayerSpec::validate(const Grid& grid) const {
    if (integrand.uses_x2() && grid.dim() < 2) {
        throw StructuralError("PlayerSpec: integrand references x2 on a 1D grid");
    }
    if (!(penalty_floor > 0.0)) {
        throw StructuralError("PlayerSpec: penalty_floor (zeta floor) must be > 0");
    }
    detail::require_same_grid(grid, target.grid(), "PlayerSpec.target");
    detail::require_same_grid(grid, control_penalty.grid(), "PlayerSpec.control_penalty");
    detail::require_same_grid(grid, source_weight.grid(), "PlayerSpec.source_weight");
    detail::require_same_grid(grid, lower_bound.grid(), "PlayerSpec.lower_bound");
    detail::require_same_grid(grid, upper_bound.grid(), "PlayerSpec.upper_bound");
    for (int i = 0; i < control_penalty.size(); ++i) {
        if (control_penalty[i] < penalty_floor) {
            throw StructuralError("PlayerSpec: control_penalty must be >= penalty_floor node-wise");
        }
    }
    for (int i = 0; i < lower_bound.size(); ++i) {
        if (!(lower_bound[i] < upper_bound[i])) {
            throw StructuralError("PlayerSpec: bounds must satisfy alpha < beta node-wise");
        }
    }
}

GameSpec::GameSpec(EllipticOperator op, Expr f, std::vector<PlayerSpec> players)
    : op_(std::move(op)), f_(std::move(f)), players_(std::move(players)) {
    if (players_.empty()) {
        throw StructuralError("GameSpec: need at least one player");
    }
    if (f_.uses_yd()) {
        throw StructuralError("GameSpec: f must not reference yd");
    }
    if (f_.uses_x2() && grid().dim() < 2) {
        throw StructuralError("GameSpec: f references x2 on a 1D grid");
    }
    for (const PlayerSpec& p : players_) {
        p.validate(grid());
    }
    check_monotone_nonlinearity(f_, grid());
}

double GameSpec::min_penalty_floor() const {
    double floor = players_[0].penalty_floor;
    for (const PlayerSpec& p : players_) floor = std::min(floor, p.penalty_floor);
    return floor;
}

ControlProfile::ControlProfile(std::vector<GridFunction> components)
    : components_(std::move(components)) {
    if (components_.empty()) {
        throw StructuralError("ControlProfile: empty");
    }
    for (const GridFunction& c : components_) {
        detail::require_same_grid(components_[0].grid(), c.grid(), "ControlProfile");
    }
}

ControlProfile ControlProfile::zero(const GameSpec& spec) {
    return ControlProfile(std::vector<GridFunction>(
        static_cast<std::size_t>(spec.player_count()), GridFunction(spec.grid())));
}

ControlProfile ControlProfile::operator+(const ControlProfile& other) const {
    std::vector<GridFunction> out;
    out.reserve(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        out.push_back(components_[k] + other.components_[k]);
    }
    return ControlProfile(std::move(out));
}

ControlProfile ControlProfile::operator-(const ControlProfile& other) const {
    std::vector<GridFunction> out;
    out.reserve(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        out.push_back(components_[k] - other.components_[k]);
    }
    return ControlProfile(std::move(out));
}

ControlProfile ControlProfile::operator*(double s) const {
    std::vector<GridFunction> out;
    out.reserve(components_.size());
    for (const GridFunction& c : components_) out.push_back(c * s);
    return ControlProfile(std::move(out));
}

double inner_product(const ControlProfile& a, const ControlProfile& b) {
    if (a.player_count() != b.player_count()) {
        throw StructuralError("ControlProfile inner_product: player counts differ");
    }
    double sum = 0.0;
    for (int k = 0; k < a.player_count(); ++k) sum += inner_product(a[k], b[k]);
    return sum;
}

double l2_norm(const ControlProfile& a) { return std::sqrt(inner_product(a, a)); }

TiltVector::TiltVector(std::vector<GridFunction> tilts) : tilts_(std::move(tilts)) {
    if (tilts_.empty()) {
        throw StructuralError("TiltVector: empty");
    }
    for (const GridFunction& t : tilts_) {
        detail::require_same_grid(tilts_[0].grid(), t.grid(), "TiltVector");
    }
}

TiltVector TiltVector::zero(const GameSpec& spec) {
    return TiltVector(std::vector<GridFunction>(
        static_cast<std::size_t>(spec.player_count()), GridFunction(spec.grid())));
}

Perturbation::Perturbation(const GameSpec& spec, GridFunction e_state,
                           std::vector<PlayerPart> players, double sigma)
    : e_state_(std::move(e_state)), players_(std::move(players)), sigma_(sigma) {
    if (!(sigma_ > 0.0)) {
        throw StructuralError("Perturbation: sigma must be > 0");
    }
    if (static_cast<int>(players_.size()) != spec.player_count()) {
        throw StructuralError("Perturbation: player count does not match the game");
    }
    detail::require_same_grid(spec.grid(), e_state_.grid(), "Perturbation.e_state");
    for (int k = 0; k < spec.player_count(); ++k) {
        const PlayerPart& part = players_[static_cast<std::size_t>(k)];
        detail::require_same_grid(spec.grid(), part.e_cost.grid(), "Perturbation.e_cost");
        detail::require_same_grid(spec.grid(), part.e_lower.grid(), "Perturbation.e_lower");
        detail::require_same_grid(spec.grid(), part.e_upper.grid(), "Perturbation.e_upper");
        const PlayerSpec& p = spec.player(k);
        for (int i = 0; i < part.e_lower.size(); ++i) {
            if (p.lower_bound[i] + part.e_lower[i] + sigma_ >
                p.upper_bound[i] + part.e_upper[i]) {
                throw StructuralError(
                    "Perturbation: shifted bounds violate the feasibility margin sigma "
                    "for player " + std::to_string(k + 1));
            }
        }
    }
}

Perturbation Perturbation::zero(const GameSpec& spec, double sigma) {
    const GridFunction z(spec.grid());
    std::vector<PlayerPart> parts(static_cast<std::size_t>(spec.player_count()),
                                  PlayerPart{z, z, z});
    return Perturbation(spec, z, std::move(parts), sigma);
}

double Perturbation::norm() const {
    double n = l2_norm(e_state_);
    for (const PlayerPart& p : players_) {
        n += l2_norm(p.e_cost) + max_abs(p.e_lower) + max_abs(p.e_upper);
    }
    return n;
}

double Perturbation::distance(const Perturbation& a, const Perturbation& b) {
    if (a.player_count() != b.player_count()) {
        throw StructuralError("Perturbation::distance: player counts differ");
    }
    double d = l2_norm(a.e_state_ - b.e_state_);
    for (std::size_t k = 0; k < a.players_.size(); ++k) {
        const PlayerPart& pa = a.players_[k];
        const PlayerPart& pb = b.players_[k];
        d += l2_norm(pa.e_cost - pb.e_cost);
        d += max_abs(pa.e_lower - pb.e_lower);
        d += max_abs(pa.e_upper - pb.e_upper);
    }
    return d;
}

GridFunction admissible_lower(const GameSpec& spec, const Perturbation& e, int k) {
    return spec.player(k).lower_bound + e.player(k).e_lower;
}

GridFunction admissible_upper(const GameSpec& spec, const Perturbation& e, int k) {
    return spec.player(k).upper_bound + e.player(k).e_upper;
}

GridFunction total_source(const GameSpec& spec, const ControlProfile& u,
                          const Perturbation& e) {
    if (u.player_count() != spec.player_count()) {
        throw StructuralError("total_source: player count mismatch");
    }
    GridFunction s = e.e_state();
    for (int k = 0; k < spec.player_count(); ++k) {
        s = s + multiply(spec.player(k).source_weight, u[k]);
    }
    return s;
}

ControlProfile project_admissible(const GameSpec& spec, const Perturbation& e,
                                  const ControlProfile& u) {
    std::vector<GridFunction> out;
    out.reserve(static_cast<std::size_t>(u.player_count()));
    for (int k = 0; k < u.player_count(); ++k) {
        out.push_back(clamp(u[k], admissible_lower(spec, e, k), admissible_upper(spec, e, k)));
    }
    return ControlProfile(std::move(out));
}

double cost(const GameSpec& spec, int k, const ControlProfile& u,
            const Perturbation& e, const TiltVector& t, const NewtonSettings& newton) {
    const PlayerSpec& player = spec.player(k);
    const GridFunction y = solve_state(spec.op(), spec.f(), total_source(spec, u, e), newton);
    const GridFunction integrand = evaluate_integrand(player.integrand, y, player.target);
    const GridFunction ones = GridFunction::constant(spec.grid(), 1.0);
    double value = inner_product(integrand, ones);
    value += 0.5 * inner_product(multiply(player.control_penalty, u[k]), u[k]);
    value += inner_product(e.player(k).e_cost, y);
    value -= inner_product(t[k], u[k]);
    return value;
}

}  // namespace nashpde
