#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bellman/mesh.hpp"
#include "bellman/problem.hpp"

namespace bellman {

enum class SliceMethod { banach, howard };

struct SolverConfig {
    SliceMethod method = SliceMethod::banach;
    /// Target sup-norm error of each slice fixed point; the iteration stops
    /// once the residual drops below tol * (1 - delta).
    double tol = 1e-10;
    long max_iterations = 1'000'000;     // banach sweeps per slice
    long max_policy_iterations = 1'000;  // howard outer iterations per slice
    ExteriorPolicy exterior{};
    int threads = 1;  // 0 = default_thread_count()
};

/// Relaxation parameters of the slice contraction map. With gamma = 1 the
/// per-slice map has Lipschitz constant contraction_factor = 1 - epsilon/tau.
struct ContractionParams {
    double epsilon = 0.0;
    double gamma = 1.0;
    double contraction_factor = 0.0;  // delta
    /// max over sampled nodes/controls of sum_k(2 a_k/h^2 + b_k/h) + c.
    double max_rate = 0.0;
};

/// Largest node/control coefficient rate sum_k(2 a_k / h^2 + b_k / h) + c,
/// sampled over every mesh node and the given times.
double max_coefficient_rate(const ControlProblem& problem, const Mesh& mesh,
                            std::span<const double> times);

/// gamma = 1 parameters: epsilon = 0.95 / (1/tau + max_rate), so every
/// stencil weight is nonnegative and delta = 1 - epsilon/tau < 1.
ContractionParams choose_contraction_params(const ControlProblem& problem, const Mesh& mesh);

/// One application of the slice map
///   G[w](x) = sup_a [ p_tau u_next(x) + sum_k p_k^a w(x + h l_k)
///                     + p^a w(x) + epsilon f^a(t, x) ].
std::vector<double> slice_fixed_point_map(const ControlProblem& problem, const Mesh& mesh,
                                          const ContractionParams& params,
                                          std::span<const double> u_next,
                                          std::span<const double> w, int level,
                                          const SolverConfig& config);

struct SliceSolveStats {
    long iterations = 0;
    double final_residual = 0.0;
    SliceMethod method = SliceMethod::banach;
};

/// Solves one implicit slice: the fixed point of the map above, starting
/// from u_next. Throws ConvergenceError past the iteration cap.
std::pair<std::vector<double>, SliceSolveStats> solve_slice(
    const ControlProblem& problem, const Mesh& mesh, const ContractionParams& params,
    std::span<const double> u_next, int level, const SolverConfig& config);

struct ParabolicSolution {
    GridFunction values;
    ContractionParams params;
    std::vector<SliceSolveStats> slice_stats;

    long total_iterations() const {
        long n = 0;
        for (const auto& s : slice_stats) n += s.iterations;
        return n;
    }
};

/// Backward time-stepping solve of the implicit scheme with terminal
/// condition u(T, x) = g(x).
ParabolicSolution solve_parabolic(const ControlProblem& problem, const Mesh& mesh,
                                  const SolverConfig& config);

}  // namespace bellman
