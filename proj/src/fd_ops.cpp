#include "bellman/fd_ops.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bellman/errors.hpp"

namespace bellman {

namespace {

[[noreturn]] void throw_evaluation_error(const char* what, std::size_t alpha, double t,
                                         std::span<const double> x) {
    std::ostringstream os;
    os << "coefficient " << what << " returned a non-finite value at alpha=" << alpha
       << ", t=" << t << ", x=(";
    for (std::size_t m = 0; m < x.size(); ++m) os << (m ? "," : "") << x[m];
    os << ")";
    throw EvaluationError(os.str());
}

double checked(double v, const char* what, std::size_t alpha, double t,
               std::span<const double> x) {
    if (!std::isfinite(v)) throw_evaluation_error(what, alpha, t, x);
    return v;
}

}  // namespace

StencilValue read_stencil(const GridFunction& u, int level, std::int64_t node, int k,
                          const ExteriorPolicy& exterior) {
    StencilValue s;
    s.center = u.at(level, node);
    s.plus = neighbor_value(u, level, node, k, exterior);
    s.minus = neighbor_value(u, level, node, -k, exterior);
    s.next_time = u.at(level + 1, node);
    return s;
}

double apply_L_h(const ControlProblem& problem, std::size_t alpha, const Mesh& mesh,
                 std::span<const double> slice, double t, std::int64_t node,
                 const ExteriorPolicy& exterior) {
    const int d1 = mesh.num_directions();
    const double h = mesh.h();
    const std::vector<double> x = mesh.position(node);
    const double center = slice[node];

    double acc = 0.0;
    for (int k = 1; k <= d1; ++k) {
        const double up = neighbor_value(mesh, slice, node, k, exterior);
        const double dn = neighbor_value(mesh, slice, node, -k, exterior);
        const double a = checked(problem.diffusion(alpha, k, t, x), "sigma", alpha, t, x);
        acc += a * Delta_h(dn, center, up, h);
        const double b_plus = checked(problem.drift(alpha, k, t, x), "b", alpha, t, x);
        const double b_minus = checked(problem.drift(alpha, -k, t, x), "b", alpha, t, x);
        acc += b_plus * delta_h(center, up, h) + b_minus * delta_h(center, dn, h);
    }
    acc -= checked(problem.discount(alpha, t, x), "c", alpha, t, x) * center;
    return acc;
}

double apply_L_h(const ControlProblem& problem, std::size_t alpha, const GridFunction& u,
                 int level, std::int64_t node, const ExteriorPolicy& exterior) {
    const Mesh& mesh = u.mesh();
    return apply_L_h(problem, alpha, mesh, u.level(level), mesh.time_levels()[level], node,
                     exterior);
}

double control_affine_value(const ControlProblem& problem, std::size_t alpha,
                            const BellmanArgs& args) {
    const double t = args.t;
    const std::span<const double> x{args.x};
    double acc = 0.0;
    const int d1 = problem.num_directions;
    for (int k = 1; k <= d1; ++k) {
        acc += checked(problem.diffusion(alpha, k, t, x), "sigma", alpha, t, x) *
               args.second_diffs[k - 1];
        acc += checked(problem.drift(alpha, k, t, x), "b", alpha, t, x) *
               args.first_diffs[signed_slot(k)];
        acc += checked(problem.drift(alpha, -k, t, x), "b", alpha, t, x) *
               args.first_diffs[signed_slot(-k)];
    }
    acc -= checked(problem.discount(alpha, t, x), "c", alpha, t, x) * args.value;
    acc += checked(problem.source(alpha, t, x), "f", alpha, t, x);
    return acc;
}

BellmanValue bellman_F(const ControlProblem& problem, const BellmanArgs& args) {
    if (problem.controls.empty())
        throw std::invalid_argument("bellman_F: control set is empty");
    const std::size_t d1 = static_cast<std::size_t>(problem.num_directions);
    if (args.second_diffs.size() != d1 || args.first_diffs.size() != 2 * d1)
        throw std::invalid_argument("bellman_F: argument arrays must have sizes d1 and 2*d1");
    BellmanValue best{control_affine_value(problem, 0, args), 0};
    for (std::size_t alpha = 1; alpha < problem.num_controls(); ++alpha) {
        const double v = control_affine_value(problem, alpha, args);
        if (v > best.value) best = {v, alpha};
    }
    return best;
}

}  // namespace bellman
