#pragma once

#include <utility>
#include <vector>

#include "bellman/implicit_solver.hpp"
#include "bellman/mesh.hpp"
#include "bellman/problem.hpp"

namespace bellman {

/// Method-of-lines solver: space is discretized as in the implicit scheme,
/// time is integrated by explicit Euler sub-steps small enough that every
/// stencil weight stays nonnegative.
struct SemidiscreteConfig {
    double internal_step = 0.0;  // 0 = derive from the monotonicity bound
    double safety = 0.9;         // fraction of the bound actually used
    ExteriorPolicy exterior{};
    int threads = 1;
};

GridFunction solve_semidiscrete(const ControlProblem& problem, const Mesh& mesh,
                                const SemidiscreteConfig& config);

enum class EllipticMode { value_iteration, long_horizon };

struct EllipticConfig {
    EllipticMode mode = EllipticMode::value_iteration;
    double tol = 1e-6;
    long max_iterations = 10'000'000;
    double horizon_max = 64.0;  // long_horizon cap on T
    double horizon_tau = 0.05;  // time step of the long-horizon solves
    ExteriorPolicy exterior{};
    int threads = 1;
    /// Optional value-iteration starting field (defaults to zero).
    std::vector<double> initial;
};

struct EllipticSolution {
    std::vector<double> u;
    double final_residual = 0.0;
    long iterations = 0;
    /// long_horizon only: whether successive horizons went Cauchy below tol
    /// before horizon_max (a false value usually signals lambda too small).
    bool horizon_converged = true;
    std::vector<std::pair<double, double>> horizon_gaps;  // (T, gap at t=0)
    std::vector<double> residual_history;                 // first 50k sweeps
};

/// Solves sup_a [L_h^a u + f^a] = 0 on the spatial lattice of `mesh`.
/// Requires time-independent coefficients and lambda > 0.
EllipticSolution solve_elliptic(const ControlProblem& problem, const Mesh& mesh,
                                const EllipticConfig& config);

}  // namespace bellman
