#include "bellman/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bellman {

namespace {

// Evaluator wrapper shifting the arguments to (t + dt, x + dx).
SpaceTimeFn shifted(SpaceTimeFn fn, double dt, std::vector<double> dx) {
    const bool trivial = dt == 0.0 &&
                         std::all_of(dx.begin(), dx.end(), [](double v) { return v == 0.0; });
    if (trivial) return fn;
    return [fn = std::move(fn), dt, dx = std::move(dx)](double t, std::span<const double> x) {
        thread_local std::vector<double> buf;
        buf.assign(x.begin(), x.end());
        for (std::size_t m = 0; m < dx.size(); ++m) buf[m] += dx[m];
        return fn(t + dt, buf);
    };
}

}  // namespace

ShakeSpec ShakeSpec::defaults(int dim, double epsilon) {
    ShakeSpec spec;
    spec.epsilon = epsilon;
    spec.space_shifts.push_back(std::vector<double>(dim, 0.0));
    for (int m = 0; m < dim; ++m) {
        std::vector<double> plus(dim, 0.0), minus(dim, 0.0);
        plus[m] = 0.99;
        minus[m] = -0.99;
        spec.space_shifts.push_back(plus);
        spec.space_shifts.push_back(minus);
    }
    spec.time_shifts = {-0.25, -0.5, -0.75};
    return spec;
}

ControlProblem shake(const ControlProblem& problem, const ShakeSpec& spec) {
    if (spec.space_shifts.empty())
        throw std::invalid_argument("shake: S must be nonempty");
    for (const auto& y : spec.space_shifts) {
        if (static_cast<int>(y.size()) != problem.dim)
            throw std::invalid_argument("shake: shift dimension mismatch");
        double norm2 = 0.0;
        for (double v : y) norm2 += v * v;
        if (norm2 >= 1.0) throw std::invalid_argument("shake: every y in S must have |y| < 1");
    }
    for (double r : spec.time_shifts) {
        if (!(r > -1.0 && r < 0.0))
            throw std::invalid_argument("shake: every r in Lambda must lie in (-1,0)");
    }

    // Lambda empty means no time shift at all.
    std::vector<double> lambdas = spec.time_shifts;
    if (lambdas.empty()) lambdas.push_back(0.0);

    const double eps = spec.epsilon;
    ControlProblem shaken;
    shaken.name = problem.name + "~shaken";
    shaken.dim = problem.dim;
    shaken.num_directions = problem.num_directions;
    shaken.bound = problem.bound;
    shaken.lambda = problem.lambda;

    for (const auto& ctrl : problem.controls) {
        for (double r : lambdas) {
            const double dt = eps * eps * r;
            for (const auto& y : spec.space_shifts) {
                std::vector<double> dx(y.size());
                for (std::size_t m = 0; m < y.size(); ++m) dx[m] = eps * y[m];
                ControlCoefficients c;
                for (const auto& s : ctrl.sigma) c.sigma.push_back(shifted(s, dt, dx));
                for (const auto& b : ctrl.drift) c.drift.push_back(shifted(b, dt, dx));
                c.discount = shifted(ctrl.discount, dt, dx);
                c.source = shifted(ctrl.source, dt, dx);
                c.label = ctrl.label + "~shift";
                shaken.controls.push_back(std::move(c));
            }
        }
    }

    if (spec.shift_terminal) {
        auto g = problem.terminal;
        auto shifts = spec.space_shifts;
        shaken.terminal = [g, shifts, eps](std::span<const double> x) {
            thread_local std::vector<double> buf;
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& y : shifts) {
                buf.assign(x.begin(), x.end());
                for (std::size_t m = 0; m < y.size(); ++m) buf[m] += eps * y[m];
                best = std::max(best, g(buf));
            }
            return best;
        };
    } else {
        shaken.terminal = problem.terminal;
    }
    return shaken;
}

double shake_gap(const ControlProblem& problem, const Mesh& mesh, const ShakeSpec& spec,
                 const SolverConfig& config) {
    const ControlProblem shaken = shake(problem, spec);
    const auto base = solve_parabolic(problem, mesh, config);
    const auto moved = solve_parabolic(shaken, mesh, config);

    // Shifted coefficient evaluations near the box edge see exterior-policy
    // artifacts; drop ceil(K*eps/h) index layers.
    const int margin = static_cast<int>(
        std::ceil(problem.bound * std::abs(spec.epsilon) / mesh.h()));
    const int R = mesh.index_radius();
    if (R - margin < 1)
        throw std::invalid_argument("shake_gap: index box too small for the exclusion margin");

    const int d1 = mesh.num_directions();
    double gap = 0.0;
    std::vector<int> multi(d1);
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
        mesh.decode(node, multi);
        bool interior = true;
        for (int k = 0; k < d1; ++k) {
            if (std::abs(multi[k]) > R - margin) {
                interior = false;
                break;
            }
        }
        if (!interior) continue;
        for (int j = 0; j < mesh.num_levels(); ++j) {
            gap = std::max(gap, std::abs(base.values.at(j, node) - moved.values.at(j, node)));
        }
    }
    return gap;
}

}  // namespace bellman
