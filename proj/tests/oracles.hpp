#pragma once

// Test-only oracles, deliberately independent of the solver code paths they
// check: a dense direct linear solve of single-control slices, the global
// space-time fixed-point iteration, a numerical PDE-residual check for the
// catalog's exact solutions, and a deterministic random-problem generator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "bellman/fd_ops.hpp"
#include "bellman/mesh.hpp"
#include "bellman/problem.hpp"

namespace bellman::testing {

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A,
                                       std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        std::swap(A[col], A[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        if (std::abs(A[col][col]) < 1e-300) throw std::runtime_error("singular slice system");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = A[r][col] / A[col][col];
            if (m == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) A[r][c] -= m * A[col][c];
            rhs[r] -= m * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double acc = rhs[r];
        for (std::size_t c = r + 1; c < n; ++c) acc -= A[r][c] * x[c];
        x[r] = acc / A[r][r];
    }
    return x;
}

// Direct solve of the implicit slice system for a single-control problem:
//   (1/tau) w - L_h w = u_next / tau + f     (clamp exterior policy).
inline std::vector<double> dense_single_control_slice(const ControlProblem& problem,
                                                      const Mesh& mesh,
                                                      std::span<const double> u_next,
                                                      int level) {
    if (problem.num_controls() != 1)
        throw std::invalid_argument("dense oracle expects a single control");
    const std::size_t n = static_cast<std::size_t>(mesh.num_nodes());
    const double t = mesh.time_levels()[level];
    const double tau = mesh.tau();
    const double h = mesh.h();
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    std::vector<double> rhs(n, 0.0);
    std::vector<double> x(mesh.dim());
    for (std::size_t node = 0; node < n; ++node) {
        mesh.position(node, x);
        double diag = 1.0 / tau + problem.discount(0, t, x);
        for (int k = 1; k <= mesh.num_directions(); ++k) {
            const double a = problem.diffusion(0, k, t, x);
            const double bp = problem.drift(0, k, t, x);
            const double bm = problem.drift(0, -k, t, x);
            const double w_plus = a / (h * h) + bp / h;
            const double w_minus = a / (h * h) + bm / h;
            diag += w_plus + w_minus;
            A[node][mesh.clamped_neighbor_index(node, k)] -= w_plus;
            A[node][mesh.clamped_neighbor_index(node, -k)] -= w_minus;
        }
        A[node][node] += diag;
        rhs[node] = u_next[node] / tau + problem.source(0, t, x);
    }
    return dense_solve(std::move(A), std::move(rhs));
}

// Full backward solve through dense slice systems.
inline GridFunction dense_single_control_parabolic(const ControlProblem& problem,
                                                   const Mesh& mesh) {
    GridFunction u(std::make_shared<const Mesh>(mesh));
    std::vector<double> x(mesh.dim());
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
        mesh.position(node, x);
        u.at(mesh.n_time(), node) = problem.terminal(x);
    }
    for (int j = mesh.n_time() - 1; j >= 0; --j) {
        const auto slice = dense_single_control_slice(problem, mesh, u.level(j + 1), j);
        std::copy(slice.begin(), slice.end(), u.level(j).begin());
    }
    return u;
}

// The global space-time contraction with discount gamma in (0,1): iterate
//   v <- G[v] on every interior level simultaneously, v(T) = g, then u = xi v.
inline GridFunction global_fixed_point_solve(const ControlProblem& problem, const Mesh& mesh,
                                             double gamma, double tol, long max_iter = 200000) {
    const int d1 = mesh.num_directions();
    const double h = mesh.h();
    const double tau = mesh.tau();
    const int n = mesh.n_time();
    const std::int64_t nodes = mesh.num_nodes();

    // Own epsilon choice (same recipe, independent code).
    double max_rate = 0.0;
    {
        std::vector<double> x(mesh.dim());
        for (std::int64_t node = 0; node < nodes; ++node) {
            mesh.position(node, x);
            for (double t : mesh.time_levels()) {
                for (std::size_t c = 0; c < problem.num_controls(); ++c) {
                    double rate = problem.discount(c, t, x);
                    for (int k = 1; k <= d1; ++k) {
                        rate += 2.0 * problem.diffusion(c, k, t, x) / (h * h);
                        rate += (problem.drift(c, k, t, x) + problem.drift(c, -k, t, x)) / h;
                    }
                    max_rate = std::max(max_rate, rate);
                }
            }
        }
    }
    const double eps = 0.95 / (1.0 / tau + max_rate);
    const double nu = (1.0 - gamma) / tau;
    const double p_tau = eps * gamma / tau;

    std::vector<double> xi(n + 1);
    xi[n] = 1.0;
    for (int j = n - 1; j >= 0; --j) xi[j] = xi[j + 1] / gamma;

    GridFunction v(std::make_shared<const Mesh>(mesh));
    std::vector<double> x(mesh.dim());
    for (std::int64_t node = 0; node < nodes; ++node) {
        mesh.position(node, x);
        v.at(n, node) = problem.terminal(x);  // xi(T) = 1
    }
    for (int j = 0; j < n; ++j)
        for (std::int64_t node = 0; node < nodes; ++node) v.at(j, node) = v.at(n, node);

    GridFunction next = v;
    for (long iter = 0; iter < max_iter; ++iter) {
        double change = 0.0;
        for (int j = 0; j < n; ++j) {
            const double t = mesh.time_levels()[j];
            for (std::int64_t node = 0; node < nodes; ++node) {
                mesh.position(node, x);
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < problem.num_controls(); ++c) {
                    double weight_sum = 0.0;
                    double acc = p_tau * v.at(j + 1, node);
                    for (int k = 1; k <= d1; ++k) {
                        const double a = problem.diffusion(c, k, t, x);
                        const double wp = eps * (a / (h * h) + problem.drift(c, k, t, x) / h);
                        const double wm = eps * (a / (h * h) + problem.drift(c, -k, t, x) / h);
                        acc += wp * v.at(j, mesh.clamped_neighbor_index(node, k));
                        acc += wm * v.at(j, mesh.clamped_neighbor_index(node, -k));
                        weight_sum += wp + wm;
                    }
                    const double diag = 1.0 - p_tau - weight_sum - eps * nu -
                                        eps * problem.discount(c, t, x);
                    acc += diag * v.at(j, node);
                    acc += eps * (1.0 / xi[j]) * problem.source(c, t, x);
                    best = std::max(best, acc);
                }
                next.at(j, node) = best;
                change = std::max(change, std::abs(best - v.at(j, node)));
            }
        }
        for (int j = 0; j < n; ++j) {
            auto src = next.level(j);
            auto dst = v.level(j);
            std::copy(src.begin(), src.end(), dst.begin());
        }
        if (change <= tol) break;
        if (iter + 1 == max_iter) throw std::runtime_error("global oracle did not converge");
    }

    GridFunction u = v;
    for (int j = 0; j <= n; ++j)
        for (std::int64_t node = 0; node < nodes; ++node) u.at(j, node) = xi[j] * v.at(j, node);
    return u;
}

// |v_t + F(D^2 v, D v, v, t, x)| by centered differences on the closure.
inline double pde_residual(const ControlProblem& problem, const ExactSolution& exact, double t,
                           std::span<const double> x0, double step = 1e-4) {
    const int d1 = problem.num_directions;
    BellmanArgs args;
    args.second_diffs.resize(d1);
    args.first_diffs.resize(2 * d1);
    args.t = t;
    args.x.assign(x0.begin(), x0.end());
    std::vector<double> xp(x0.size()), xm(x0.size());
    const double center = exact.value(t, x0);
    for (int k = 1; k <= d1; ++k) {
        // directions live in the problem's mesh spec; callers pass unit axes
        for (std::size_t m = 0; m < x0.size(); ++m) {
            xp[m] = x0[m];
            xm[m] = x0[m];
        }
        // caller must provide axis-aligned unit directions via dir argument;
        // this helper assumes l_k = e_k.
        xp[k - 1] += step;
        xm[k - 1] -= step;
        const double up = exact.value(t, xp);
        const double dn = exact.value(t, xm);
        args.second_diffs[k - 1] = (up - 2.0 * center + dn) / (step * step);
        args.first_diffs[signed_slot(k)] = (up - dn) / (2.0 * step);
        args.first_diffs[signed_slot(-k)] = -(up - dn) / (2.0 * step);
    }
    args.value = center;
    const double vt =
        (exact.value(t + step, x0) - exact.value(t - step, x0)) / (2.0 * step);
    return std::abs(vt + bellman_F(problem, args).value);
}

// Deterministic bounded random problems on the 1-d unit-direction lattice.
// Drifts and discounts respect b >= 0 and c >= lambda by construction.
struct RandomProblemGen {
    std::mt19937_64 rng;
    explicit RandomProblemGen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    ControlProblem make(int num_controls, double lambda) {
        ControlProblem p;
        p.name = "random";
        p.dim = 1;
        p.num_directions = 1;
        p.lambda = lambda;
        p.bound = 4.0;
        for (int c = 0; c < num_controls; ++c) {
            const double s0 = uniform(0.0, 1.0);
            const double s1 = uniform(0.0, 0.5);
            const double sp = uniform(0.0, 6.28);
            const double b0 = uniform(0.0, 1.0);
            const double bp = uniform(0.0, 6.28);
            const double b0m = uniform(0.0, 1.0);
            const double c0 = uniform(0.0, 1.0);
            const double f0 = uniform(-1.0, 1.0);
            const double f1 = uniform(0.0, 2.0);
            const double fp = uniform(0.0, 6.28);
            ControlCoefficients ctrl;
            ctrl.sigma = {[=](double, std::span<const double> x) {
                return s0 + s1 * std::sin(x[0] + sp);
            }};
            ctrl.drift.resize(2);
            ctrl.drift[signed_slot(1)] = [=](double, std::span<const double> x) {
                return b0 * (1.0 + 0.5 * std::sin(f1 * x[0] + bp));
            };
            ctrl.drift[signed_slot(-1)] = [=](double t, std::span<const double>) {
                return b0m * (1.0 + 0.5 * std::cos(t));
            };
            ctrl.discount = [=](double, std::span<const double> x) {
                return lambda + c0 * (1.0 + std::cos(x[0])) * 0.5;
            };
            ctrl.source = [=](double, std::span<const double> x) {
                return f0 * std::sin(f1 * x[0] + fp);
            };
            p.controls.push_back(std::move(ctrl));
        }
        const double g0 = uniform(-1.0, 1.0);
        const double g1 = uniform(0.0, 2.0);
        p.terminal = [=](std::span<const double> x) { return g0 * std::cos(g1 * x[0]); };
        return p;
    }

    // Ordered variant: f2 = f1 + df (df >= 0), g2 = g1 + dg (dg >= 0).
    static ControlProblem bump(const ControlProblem& base, double df, double dg) {
        ControlProblem p = base;
        for (auto& ctrl : p.controls) {
            auto f = ctrl.source;
            ctrl.source = [f, df](double t, std::span<const double> x) { return f(t, x) + df; };
        }
        auto g = p.terminal;
        p.terminal = [g, dg](std::span<const double> x) { return g(x) + dg; };
        return p;
    }
};

}  // namespace bellman::testing
