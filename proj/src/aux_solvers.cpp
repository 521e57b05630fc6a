#include "bellman/aux_solvers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include "bellman/errors.hpp"
#include "bellman/parallel.hpp"

namespace bellman {

namespace {

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvaluationError(std::string("coefficient ") + what +
                                                 " returned a non-finite value");
    return v;
}

// One explicit Euler sub-step of size dt backward in time:
//   out = cur + dt * sup_a [L_h^a cur + f^a](t).
// Throws if any center weight 1 - dt*rate would go negative.
void euler_substep(const ControlProblem& problem, const Mesh& mesh,
                   std::span<const double> cur, std::span<double> out, double t, double dt,
                   const ExteriorPolicy& exterior, int threads) {
    const int d1 = mesh.num_directions();
    const double h = mesh.h();
    const std::int64_t nodes = mesh.num_nodes();
    parallel_for(nodes, threads, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> x(mesh.dim());
        for (std::int64_t node = lo; node < hi; ++node) {
            mesh.position(node, x);
            const double center = cur[node];
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < problem.num_controls(); ++c) {
                double val = 0.0;
                double rate = 0.0;
                for (int k = 1; k <= d1; ++k) {
                    const double up = neighbor_value(mesh, cur, node, k, exterior);
                    const double dn = neighbor_value(mesh, cur, node, -k, exterior);
                    const double a = checked(problem.diffusion(c, k, t, x), "sigma");
                    const double bp = checked(problem.drift(c, k, t, x), "b");
                    const double bm = checked(problem.drift(c, -k, t, x), "b");
                    val += a * (up - 2.0 * center + dn) / (h * h);
                    val += bp * (up - center) / h + bm * (dn - center) / h;
                    rate += 2.0 * a / (h * h) + (bp + bm) / h;
                }
                const double cc = checked(problem.discount(c, t, x), "c");
                val += -cc * center + checked(problem.source(c, t, x), "f");
                rate += cc;
                if (dt * rate > 1.0 + 1e-12)
                    throw ConvergenceError(
                        "semidiscrete sub-step lost monotonicity (coefficients exceeded the "
                        "sampled bound)",
                        dt * rate);
                best = std::max(best, val);
            }
            out[node] = center + dt * best;
        }
    });
}

}  // namespace

GridFunction solve_semidiscrete(const ControlProblem& problem, const Mesh& mesh,
                                const SemidiscreteConfig& config) {
    if (!(config.safety > 0.0 && config.safety < 1.0))
        throw std::invalid_argument("semidiscrete: safety must lie in (0,1)");
    const double rate = max_coefficient_rate(problem, mesh, mesh.time_levels());
    const double bound = config.safety / std::max(rate, 1e-300);
    double dt = config.internal_step;
    if (dt <= 0.0) {
        dt = std::min(bound, mesh.horizon());
    } else if (dt > bound * (1.0 + 1e-12)) {
        throw std::invalid_argument(
            "semidiscrete: internal_step violates the monotonicity bound safety/max_rate");
    }

    ExteriorPolicy exterior = config.exterior;
    if (exterior.kind == ExteriorPolicy::Kind::extend_terminal && !exterior.terminal)
        exterior.terminal = problem.terminal;

    GridFunction u(std::make_shared<const Mesh>(mesh));
    const int n = mesh.n_time();
    const std::int64_t nodes = mesh.num_nodes();
    {
        auto top = u.level(n);
        std::vector<double> x(mesh.dim());
        for (std::int64_t node = 0; node < nodes; ++node) {
            mesh.position(node, x);
            top[node] = problem.terminal(x);
        }
    }

    std::vector<double> cur(u.level(n).begin(), u.level(n).end());
    std::vector<double> next(cur.size());
    for (int j = n - 1; j >= 0; --j) {
        const double t_hi = mesh.time_levels()[j + 1];
        const double t_lo = mesh.time_levels()[j];
        const double gap = t_hi - t_lo;
        const long steps = std::max<long>(1, static_cast<long>(std::ceil(gap / dt - 1e-12)));
        const double ds = gap / static_cast<double>(steps);
        double s = t_hi;
        for (long m = 0; m < steps; ++m) {
            euler_substep(problem, mesh, cur, next, s, ds, exterior, config.threads);
            cur.swap(next);
            s -= ds;
        }
        std::copy(cur.begin(), cur.end(), u.level(j).begin());
    }
    if (!u.all_finite())
        throw ConvergenceError("semidiscrete integration produced non-finite values", 0.0);
    return u;
}

EllipticSolution solve_elliptic(const ControlProblem& problem, const Mesh& mesh,
                                const EllipticConfig& config) {
    if (!(problem.lambda > 0.0))
        throw std::invalid_argument("elliptic solver requires lambda > 0");

    // The stationary equation only makes sense for time-independent
    // coefficients; spot-check a few nodes and times.
    {
        std::vector<double> x(mesh.dim());
        const std::int64_t nodes = mesh.num_nodes();
        for (std::int64_t node : {std::int64_t(0), nodes / 2, nodes - 1}) {
            mesh.position(node, x);
            for (std::size_t c = 0; c < problem.num_controls(); ++c) {
                for (double t : {0.37, 1.23}) {
                    double d0 = 0.0, dt = 0.0;
                    for (int k = 1; k <= mesh.num_directions(); ++k) {
                        d0 += problem.sigma(c, k, 0.0, x) + problem.drift(c, k, 0.0, x) +
                              problem.drift(c, -k, 0.0, x);
                        dt += problem.sigma(c, k, t, x) + problem.drift(c, k, t, x) +
                              problem.drift(c, -k, t, x);
                    }
                    d0 += problem.discount(c, 0.0, x) + problem.source(c, 0.0, x);
                    dt += problem.discount(c, t, x) + problem.source(c, t, x);
                    if (std::abs(d0 - dt) > 1e-10 * (1.0 + std::abs(d0)))
                        throw std::invalid_argument(
                            "elliptic solver requires time-independent coefficients");
                }
            }
        }
    }

    ExteriorPolicy exterior = config.exterior;
    if (exterior.kind == ExteriorPolicy::Kind::extend_terminal && !exterior.terminal)
        exterior.terminal = problem.terminal;

    EllipticSolution sol;

    if (config.mode == EllipticMode::long_horizon) {
        ControlProblem zero_terminal = problem;
        zero_terminal.terminal = [](std::span<const double>) { return 0.0; };
        SolverConfig inner;
        inner.tol = std::min(1e-10, 0.01 * config.tol);
        inner.exterior = exterior;
        inner.threads = config.threads;

        std::vector<double> prev;
        double T = 1.0;
        bool converged = false;
        while (true) {
            MeshSpec spec = mesh.spec();
            spec.horizon = T;
            spec.tau = config.horizon_tau;
            const Mesh horizon_mesh = build_mesh(spec);
            auto parabolic = solve_parabolic(zero_terminal, horizon_mesh, inner);
            std::vector<double> at_zero(parabolic.values.level(0).begin(),
                                        parabolic.values.level(0).end());
            if (!prev.empty()) {
                double gap = 0.0;
                for (std::size_t i = 0; i < at_zero.size(); ++i)
                    gap = std::max(gap, std::abs(at_zero[i] - prev[i]));
                sol.horizon_gaps.emplace_back(T, gap);
                if (gap < config.tol) {
                    sol.u = std::move(at_zero);
                    sol.final_residual = gap;
                    converged = true;
                    break;
                }
            }
            prev = std::move(at_zero);
            if (T >= config.horizon_max) {
                sol.u = std::move(prev);
                sol.final_residual =
                    sol.horizon_gaps.empty() ? 0.0 : sol.horizon_gaps.back().second;
                break;
            }
            T *= 2.0;
        }
        sol.horizon_converged = converged;
        sol.iterations = static_cast<long>(sol.horizon_gaps.size()) + 1;
        return sol;
    }

    // Value iteration u <- u + eps * sup_a [L_h u + f]; the update has
    // nonnegative stencil weights and contracts with factor 1 - eps*lambda.
    const double times[] = {0.0};
    const double rate = max_coefficient_rate(problem, mesh, times);
    const double eps = 0.95 / std::max(rate, 1e-300);
    const std::int64_t nodes = mesh.num_nodes();

    std::vector<double> u(nodes, 0.0);
    if (!config.initial.empty()) {
        if (static_cast<std::int64_t>(config.initial.size()) != nodes)
            throw std::invalid_argument("elliptic initial guess has the wrong size");
        u = config.initial;
    }
    std::vector<double> next(nodes);
    const double resid_target = config.tol * problem.lambda;
    std::atomic<double> resid{0.0};

    const int d1 = mesh.num_directions();
    const double h = mesh.h();
    for (long iter = 1; iter <= config.max_iterations; ++iter) {
        resid.store(0.0);
        parallel_for(nodes, config.threads, [&](std::int64_t lo, std::int64_t hi) {
            std::vector<double> x(mesh.dim());
            double local = 0.0;
            for (std::int64_t node = lo; node < hi; ++node) {
                mesh.position(node, x);
                const double center = u[node];
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < problem.num_controls(); ++c) {
                    double val = 0.0;
                    for (int k = 1; k <= d1; ++k) {
                        const double up = neighbor_value(mesh, u, node, k, exterior);
                        const double dn = neighbor_value(mesh, u, node, -k, exterior);
                        const double a = checked(problem.diffusion(c, k, 0.0, x), "sigma");
                        const double bp = checked(problem.drift(c, k, 0.0, x), "b");
                        const double bm = checked(problem.drift(c, -k, 0.0, x), "b");
                        val += a * (up - 2.0 * center + dn) / (h * h);
                        val += bp * (up - center) / h + bm * (dn - center) / h;
                    }
                    val += -checked(problem.discount(c, 0.0, x), "c") * center +
                           checked(problem.source(c, 0.0, x), "f");
                    best = std::max(best, val);
                }
                next[node] = center + eps * best;
                local = std::max(local, std::abs(best));
            }
            double cur = resid.load(std::memory_order_relaxed);
            while (cur < local && !resid.compare_exchange_weak(cur, local)) {
            }
        });
        u.swap(next);
        sol.iterations = iter;
        sol.final_residual = resid.load();
        if (sol.residual_history.size() < 50000)
            sol.residual_history.push_back(sol.final_residual);
        if (sol.final_residual <= resid_target) {
            for (double v : u) {
                if (!std::isfinite(v))
                    throw ConvergenceError("elliptic iteration produced non-finite values", 0.0);
            }
            sol.u = std::move(u);
            return sol;
        }
    }
    throw ConvergenceError("elliptic value iteration exceeded max_iterations",
                           sol.final_residual);
}

}  // namespace bellman
