#pragma once

#include <vector>

#include "bellman/implicit_solver.hpp"
#include "bellman/mesh.hpp"
#include "bellman/problem.hpp"

namespace bellman {

/// A coefficient shake: the control set is enlarged to A x Lambda x S and
/// every coefficient is evaluated at (t + eps^2 r, x + eps y).
struct ShakeSpec {
    double epsilon = 0.1;
    std::vector<std::vector<double>> space_shifts;  // S, subset of the open unit ball
    std::vector<double> time_shifts;                // Lambda, subset of (-1,0); may be empty
    /// true: terminal becomes sup_{y in S} g(x + eps y); false: g unchanged.
    bool shift_terminal = true;

    /// S = {0} and {+-0.99 e_j}, Lambda = {-0.25, -0.5, -0.75}.
    static ShakeSpec defaults(int dim, double epsilon);
};

/// Returns the shaken problem. Throws std::invalid_argument on an invalid
/// spec (empty S, |y| >= 1, r outside (-1,0)).
ControlProblem shake(const ControlProblem& problem, const ShakeSpec& spec);

/// Solves original and shaken problems on the same mesh and returns the
/// sup-norm gap over all time levels and the interior nodes, excluding
/// ceil(K*eps/h) index layers next to the box boundary.
double shake_gap(const ControlProblem& problem, const Mesh& mesh, const ShakeSpec& spec,
                 const SolverConfig& config);

}  // namespace bellman
