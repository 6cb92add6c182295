#pragma once

#include <vector>

#include "nashpde/game.hpp"

namespace nashpde {

/// A consistent evaluation point: controls, perturbation, the perturbed
/// state, and one adjoint per player (source dL_k/dy(x, y) + e_cost_k).
/// curvature_weight caches d2L_k/dy2(x, y) - phi_k * d2f/dy2(x, y), the
/// field every Hessian action multiplies with.
struct EquilibriumPoint {
    ControlProfile u;
    Perturbation e;
    GridFunction state;
    std::vector<GridFunction> adjoints;
    std::vector<GridFunction> curvature_weights;
};

EquilibriumPoint evaluate_point(const GameSpec& spec, ControlProfile u,
                                Perturbation e, const NewtonSettings& newton = {});

/// Partial cost gradient of player k: zeta_k u_k + B_k phi_k. The B_k
/// factor comes from differentiating through the source sum B_i u_i.
GridFunction gradient(const GameSpec& spec, const EquilibriumPoint& pt, int k);

/// The stacked map F(u, e) = (grad_1, ..., grad_m).
ControlProfile pseudo_gradient(const GameSpec& spec, const EquilibriumPoint& pt);

/// Riesz representative of h_k -> D^2_{u_k u_j} J_k (h_k, h_j): two linear
/// solves, returning B_k * K^{-1}(D_k * K^{-1}(B_j h_j)) + [k==j] zeta_k h_j
/// with K = A + diag(df/dy) and D_k the cached curvature weight.
GridFunction hessian_block_apply(const GameSpec& spec, const EquilibriumPoint& pt,
                                 int k, int j, const GridFunction& h_j,
                                 const LinearSolveSettings& linear = {});

/// F'_u(u, e) h, row k = sum_j H_kj h_j. Costs 2m linear solves.
ControlProfile apply_jacobian(const GameSpec& spec, const EquilibriumPoint& pt,
                              const ControlProfile& h,
                              const LinearSolveSettings& linear = {});

/// F'_u(u, e)^T h. Costs m+1 linear solves.
ControlProfile apply_jacobian_transpose(const GameSpec& spec,
                                        const EquilibriumPoint& pt,
                                        const ControlProfile& h,
                                        const LinearSolveSettings& linear = {});

/// 1/2 (F'_u + F'_u^T) h.
ControlProfile apply_symmetrized_jacobian(const GameSpec& spec,
                                          const EquilibriumPoint& pt,
                                          const ControlProfile& h,
                                          const LinearSolveSettings& linear = {});

/// Q(h) = <F'_u(u, e) h, h> = sum_k sum_j <H_kj h_j, h_k>.
double quadratic_form(const GameSpec& spec, const EquilibriumPoint& pt,
                      const ControlProfile& h,
                      const LinearSolveSettings& linear = {});

/// The coercive split part Q2(h) = sum_k int zeta_k h_k^2; Q1 = Q - Q2.
double quadratic_form_penalty_part(const GameSpec& spec, const ControlProfile& h);

}  // namespace nashpde
