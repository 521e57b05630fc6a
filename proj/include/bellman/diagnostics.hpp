#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bellman/aux_solvers.hpp"
#include "bellman/implicit_solver.hpp"
#include "bellman/mesh.hpp"
#include "bellman/problem.hpp"

namespace bellman {

/// Empirical regularity statistics of a grid function: the largest spatial
/// difference quotient over lattice neighbors and the largest temporal
/// quotient |u(t,x)-u(s,x)| / |t-s|^{1/2} over level pairs with |t-s| <= 1.
struct RegularityReport {
    double lipschitz_x = 0.0;
    double holder_t = 0.0;
    double c0_used = 0.0;  // reported constants are raw; c0 fixed to 0
};

RegularityReport measure_regularity(const GridFunction& u, int threads = 0);

struct ComparisonReport {
    bool applicable = true;   // ordered preconditions held under sampling
    std::string note;
    double max_violation = 0.0;  // sup (u1 - u2)_+ over all nodes
    bool pass = false;           // violation <= 1e-8
};

/// Discrete comparison: with f1 <= f2 and g1 <= g2 (sampled), solves both
/// problems and reports the largest violation of u1 <= u2.
ComparisonReport check_comparison(const ControlProblem& p1, const ControlProblem& p2,
                                  const Mesh& mesh, const SolverConfig& config);

enum class Scheme { implicit_fd, semidiscrete };

struct ConvergenceReport {
    std::vector<double> taus;
    std::vector<double> hs;
    std::vector<double> errors;           // interior sup error per mesh
    std::vector<double> pairwise_orders;  // log2(err_i/err_{i+1}) per halving
    double fitted_order = 0.0;            // least-squares slope in log h
    double fitted_constant = 0.0;         // exp(intercept)
    bool degenerate = false;              // errors at solver-noise level; no fit
};

/// Solves on each mesh, measures the interior sup error against the oracle
/// (margin: ceil(K*T/h) index layers, overridable), fits order and constant.
/// Requires at least 3 meshes.
ConvergenceReport convergence_study(const ControlProblem& problem, const ExactSolution& oracle,
                                    const std::vector<MeshSpec>& meshes,
                                    const SolverConfig& config,
                                    Scheme scheme = Scheme::implicit_fd,
                                    int margin_override = -1);

/// Interior sup error of a solved field against the oracle, excluding
/// `margin_layers` index layers at the box boundary.
double interior_sup_error(const GridFunction& u, const ExactSolution& oracle,
                          int margin_layers);

struct EllipticLimitReport {
    std::vector<double> horizons;
    std::vector<double> gaps;  // sup |elliptic - parabolic(T) at t=0|
    double final_gap = 0.0;
    bool geometric_decay = true;  // each doubling at least halves the gap
};

/// Compares value-iteration elliptic solutions against finite-horizon
/// parabolic solves with g = 0 at increasing horizons.
EllipticLimitReport check_elliptic_limit(const ControlProblem& problem, const Mesh& mesh,
                                         const std::vector<double>& horizons,
                                         const EllipticConfig& config);

struct ObstacleResiduals {
    double operator_positive_part = 0.0;  // sup (L1 u)_+ , L1 = a Delta_h - c
    double obstacle_violation = 0.0;      // sup (g_obs - u)_+
    double active_set_residual = 0.0;     // sup |L1 u| on { u > g_obs + margin }
};

/// Complementarity residuals of an obstacle solve on one spatial slice.
/// `margin` is the active-set margin (10/M for penalty weight M).
ObstacleResiduals check_obstacle_complementarity(std::span<const double> u, const SpaceFn& g_obs,
                                                 const Mesh& mesh, double a_continue,
                                                 double c_continue, double margin,
                                                 const ExteriorPolicy& exterior);

/// Least-squares fit of log(error) = order*log(h) + log(constant).
std::pair<double, double> fit_order(std::span<const double> hs, std::span<const double> errors);

}  // namespace bellman
