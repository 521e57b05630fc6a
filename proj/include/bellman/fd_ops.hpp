#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bellman/mesh.hpp"
#include "bellman/problem.hpp"

namespace bellman {

/// Values a directional stencil reads: u at x, x +- h*l and at the next
/// time level (t + tau_T(t)).
struct StencilValue {
    double center = 0.0;
    double plus = 0.0;
    double minus = 0.0;
    double next_time = 0.0;
};

/// Gathers the stencil of direction k at (level, node); exterior reads go
/// through the policy. level must sit below the terminal level.
StencilValue read_stencil(const GridFunction& u, int level, std::int64_t node, int k,
                          const ExteriorPolicy& exterior);

/// Arguments of the Bellman nonlinearity F(p_k, q_k, r, t, x):
/// second differences p_k (k = 1..d1), first differences q_k per signed
/// direction (signed_slot order), the value r and the evaluation point.
struct BellmanArgs {
    std::vector<double> second_diffs;  // size d1
    std::vector<double> first_diffs;   // size 2*d1
    double value = 0.0;                // r
    double t = 0.0;
    std::vector<double> x;
};

/// Forward difference (u(x+hl) - u(x)) / h.
inline double delta_h(double u_at_x, double u_at_x_plus_hl, double h) {
    return (u_at_x_plus_hl - u_at_x) / h;
}

/// Central second difference (u(x+hl) - 2u(x) + u(x-hl)) / h^2.
inline double Delta_h(double u_minus, double u_center, double u_plus, double h) {
    return (u_plus - 2.0 * u_center + u_minus) / (h * h);
}

/// One-sided time difference with fixed denominator tau, even on the short
/// final step where u_next is sampled at (t + tau) ^ T.
inline double delta_tau_T(double u_now, double u_next, double tau) {
    return (u_next - u_now) / tau;
}

/// L_h^alpha u at (t_j, position(i)):
///   sum_{k=1..d1} a_k Delta_{h,l_k} u + sum_{signed k} b_k delta_{h,l_k} u - c u,
/// with a_k = (1/2) sigma_k^2. Throws EvaluationError when a coefficient
/// evaluator returns a non-finite value.
double apply_L_h(const ControlProblem& problem, std::size_t alpha, const GridFunction& u,
                 int level, std::int64_t node, const ExteriorPolicy& exterior);

/// Same operator against one spatial slice at time t.
double apply_L_h(const ControlProblem& problem, std::size_t alpha, const Mesh& mesh,
                 std::span<const double> slice, double t, std::int64_t node,
                 const ExteriorPolicy& exterior);

struct BellmanValue {
    double value = 0.0;
    std::size_t argmax = 0;  // ties broken by lowest control index
};

/// sup over the finite control set of a_k p_k + b_k q_k - c r + f.
BellmanValue bellman_F(const ControlProblem& problem, const BellmanArgs& args);

/// The affine expression of one control at the given arguments (the
/// quantity bellman_F maximizes); exposed for the sup-of-differences
/// property checks.
double control_affine_value(const ControlProblem& problem, std::size_t alpha,
                            const BellmanArgs& args);

}  // namespace bellman
