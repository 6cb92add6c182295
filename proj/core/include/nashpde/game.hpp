#pragma once

#include <optional>
#include <vector>

#include "nashpde/elliptic.hpp"
#include "nashpde/expr.hpp"
#include "nashpde/grid.hpp"

namespace nashpde {

/// One player's data: cost integrand L(x, y, yd), target field, quadratic
/// control penalty with its positive floor, control-to-source weight, and
/// box bounds.
struct PlayerSpec {
    Expr integrand;               // L(x, y, yd)
    GridFunction target;          // yd
    GridFunction control_penalty; // zeta, node-wise >= penalty_floor > 0
    double penalty_floor;
    GridFunction source_weight;   // B
    GridFunction lower_bound;     // alpha
    GridFunction upper_bound;     // beta, node-wise > alpha

    void validate(const Grid& grid) const;
};

/// Full m-player game: shared grid and elliptic operator, state
/// nonlinearity f(x, y), and per-player data. f is checked for df/dy >= 0
/// by sampling over the grid and a state range at construction.
class GameSpec {
public:
    GameSpec(EllipticOperator op, Expr f, std::vector<PlayerSpec> players);

    const Grid& grid() const { return op_.grid(); }
    const EllipticOperator& op() const { return op_; }
    const Expr& f() const { return f_; }
    int player_count() const { return static_cast<int>(players_.size()); }
    const PlayerSpec& player(int k) const { return players_[static_cast<std::size_t>(k)]; }
    const std::vector<PlayerSpec>& players() const { return players_; }

    double min_penalty_floor() const;

private:
    EllipticOperator op_;
    Expr f_;
    std::vector<PlayerSpec> players_;
};

/// Stacked control profile u = (u_1, ..., u_m). The product space carries
/// the inner product sum_k (u_k, v_k)_{L2}.
class ControlProfile {
public:
    explicit ControlProfile(std::vector<GridFunction> components);
    static ControlProfile zero(const GameSpec& spec);

    int player_count() const { return static_cast<int>(components_.size()); }
    const GridFunction& operator[](int k) const { return components_[static_cast<std::size_t>(k)]; }
    const std::vector<GridFunction>& components() const { return components_; }

    ControlProfile operator+(const ControlProfile& other) const;
    ControlProfile operator-(const ControlProfile& other) const;
    ControlProfile operator*(double s) const;

private:
    std::vector<GridFunction> components_;
};

double inner_product(const ControlProfile& a, const ControlProfile& b);
double l2_norm(const ControlProfile& a);

/// Tilt parameter u* = (u*_1, ..., u*_m): linear terms subtracted from the
/// player costs.
class TiltVector {
public:
    explicit TiltVector(std::vector<GridFunction> tilts);
    static TiltVector zero(const GameSpec& spec);

    int player_count() const { return static_cast<int>(tilts_.size()); }
    const GridFunction& operator[](int k) const { return tilts_[static_cast<std::size_t>(k)]; }

private:
    std::vector<GridFunction> tilts_;
};

/// Basic perturbation e = (e_state, {e_cost, e_lower, e_upper}_k). The
/// bound shifts must keep every box nonempty with margin sigma; violations
/// are rejected at construction.
class Perturbation {
public:
    struct PlayerPart {
        GridFunction e_cost;   // added to the adjoint source and paired with y in the cost
        GridFunction e_lower;  // shift of the lower bound
        GridFunction e_upper;  // shift of the upper bound
    };

    Perturbation(const GameSpec& spec, GridFunction e_state,
                 std::vector<PlayerPart> players, double sigma = 1e-6);
    static Perturbation zero(const GameSpec& spec, double sigma = 1e-6);

    const GridFunction& e_state() const { return e_state_; }
    const PlayerPart& player(int k) const { return players_[static_cast<std::size_t>(k)]; }
    int player_count() const { return static_cast<int>(players_.size()); }
    double sigma() const { return sigma_; }

    /// Parameter-space norm: ||e_state||_L2 + sum_k (||e_cost||_L2 +
    /// max|e_lower| + max|e_upper|).
    double norm() const;

    static double distance(const Perturbation& a, const Perturbation& b);

private:
    GridFunction e_state_;
    std::vector<PlayerPart> players_;
    double sigma_;
};

/// Effective box bounds for player k under a perturbation.
GridFunction admissible_lower(const GameSpec& spec, const Perturbation& e, int k);
GridFunction admissible_upper(const GameSpec& spec, const Perturbation& e, int k);

/// Right-hand side of the perturbed state equation: sum_i B_i u_i + e_state.
GridFunction total_source(const GameSpec& spec, const ControlProfile& u,
                          const Perturbation& e);

/// Exact L2 projection onto the perturbed admissible box product set
/// (node-wise clamp per player).
ControlProfile project_admissible(const GameSpec& spec, const Perturbation& e,
                                  const ControlProfile& u);

/// Parametric cost of player k at the profile u:
///   int L_k(x, y, yd_k) + 1/2 int zeta_k u_k^2 + (e_cost_k, y) - (u*_k, u_k)
/// with y the solution of the perturbed state equation.
double cost(const GameSpec& spec, int k, const ControlProfile& u,
            const Perturbation& e, const TiltVector& t,
            const NewtonSettings& newton = {});

}  // namespace nashpde
