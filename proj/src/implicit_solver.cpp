#include "bellman/implicit_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bellman/errors.hpp"
#include "bellman/parallel.hpp"

namespace bellman {

namespace {

// Per-slice stencil tables. The coefficient evaluations are hoisted out of
// the contraction loop: each control contributes nonnegative neighbor
// weights, a diagonal weight and a constant term (source, coupling to the
// next time level, exterior-policy values).
struct SliceTables {
    std::int64_t nodes = 0;
    int n_ctrl = 0;
    int n_signed = 0;
    std::vector<std::int64_t> nbr;  // [node][s]; exterior folded entries point at 0
    std::vector<double> weight;     // [ctrl][node][s]
    std::vector<double> diag;       // [ctrl][node]
    std::vector<double> base;       // [ctrl][node]
};

double checked_coeff(double v, const char* what, std::size_t alpha, double t,
                     std::span<const double> x) {
    if (std::isfinite(v)) return v;
    std::ostringstream os;
    os << "coefficient " << what << " returned a non-finite value at alpha=" << alpha
       << ", t=" << t << ", x=(";
    for (std::size_t m = 0; m < x.size(); ++m) os << (m ? "," : "") << x[m];
    os << ")";
    throw EvaluationError(os.str());
}

SliceTables build_slice_tables(const ControlProblem& problem, const Mesh& mesh,
                               const ContractionParams& params, std::span<const double> u_next,
                               int level, const SolverConfig& config) {
    const int d1 = mesh.num_directions();
    const int ns = 2 * d1;
    const std::int64_t nodes = mesh.num_nodes();
    const int n_ctrl = static_cast<int>(problem.num_controls());
    const double h = mesh.h();
    const double tau = mesh.tau();
    const double eps = params.epsilon;
    const double nu = (1.0 - params.gamma) / tau;
    const double p_tau = eps * params.gamma / tau;
    const double t = mesh.time_levels()[level];

    if (config.exterior.kind == ExteriorPolicy::Kind::extend_terminal &&
        !config.exterior.terminal)
        throw std::invalid_argument("extend_terminal exterior policy needs a terminal evaluator");

    SliceTables tab;
    tab.nodes = nodes;
    tab.n_ctrl = n_ctrl;
    tab.n_signed = ns;
    tab.nbr.resize(nodes * ns);
    tab.weight.resize(static_cast<std::size_t>(n_ctrl) * nodes * ns);
    tab.diag.resize(static_cast<std::size_t>(n_ctrl) * nodes);
    tab.base.resize(static_cast<std::size_t>(n_ctrl) * nodes);

    // Exterior-policy values are independent of the unknown slice, so they
    // fold into the constant term.
    std::vector<double> ext_value;
    std::vector<char> is_ext(nodes * ns, 0);
    if (config.exterior.kind != ExteriorPolicy::Kind::clamp) ext_value.resize(nodes * ns, 0.0);

    parallel_for(nodes, config.threads, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> x(mesh.dim());
        std::vector<double> xe(mesh.dim());
        for (std::int64_t node = lo; node < hi; ++node) {
            for (int s = 0; s < ns; ++s) {
                const int signed_k = (s % 2 == 0 ? 1 : -1) * (s / 2 + 1);
                const std::int64_t nb = mesh.neighbor_index(node, signed_k);
                if (nb >= 0) {
                    tab.nbr[node * ns + s] = nb;
                } else if (config.exterior.kind == ExteriorPolicy::Kind::clamp) {
                    tab.nbr[node * ns + s] = mesh.clamped_neighbor_index(node, signed_k);
                } else {
                    tab.nbr[node * ns + s] = 0;  // weight moves into base
                    is_ext[node * ns + s] = 1;
                    if (config.exterior.kind == ExteriorPolicy::Kind::constant) {
                        ext_value[node * ns + s] = config.exterior.constant_value;
                    } else {
                        mesh.neighbor_position(node, signed_k, xe);
                        ext_value[node * ns + s] = config.exterior.terminal(xe);
                    }
                }
            }

            mesh.position(node, x);
            for (int c = 0; c < n_ctrl; ++c) {
                double weight_sum = 0.0;
                double base = 0.0;
                for (int k = 1; k <= d1; ++k) {
                    const double a =
                        checked_coeff(problem.diffusion(c, k, t, x), "sigma", c, t, x);
                    const double bp = checked_coeff(problem.drift(c, k, t, x), "b", c, t, x);
                    const double bm = checked_coeff(problem.drift(c, -k, t, x), "b", c, t, x);
                    const double w_plus = eps * (a / (h * h) + bp / h);
                    const double w_minus = eps * (a / (h * h) + bm / h);
                    const int sp = signed_slot(k);
                    const int sm = signed_slot(-k);
                    const std::size_t off = (static_cast<std::size_t>(c) * nodes + node) * ns;
                    tab.weight[off + sp] = w_plus;
                    tab.weight[off + sm] = w_minus;
                    weight_sum += w_plus + w_minus;
                    if (w_plus < 0.0 || w_minus < 0.0)
                        throw std::invalid_argument(
                            "slice map: negative stencil weight (b_k < 0?)");
                }
                const double cc = checked_coeff(problem.discount(c, t, x), "c", c, t, x);
                const double f = checked_coeff(problem.source(c, t, x), "f", c, t, x);
                const double diag = 1.0 - p_tau - weight_sum - eps * nu - eps * cc;
                if (diag < -1e-12)
                    throw std::invalid_argument(
                        "slice map: negative diagonal weight; epsilon too large for the "
                        "coefficients");
                base = eps * f + p_tau * u_next[node];
                if (!ext_value.empty()) {
                    const std::size_t off = (static_cast<std::size_t>(c) * nodes + node) * ns;
                    for (int s = 0; s < ns; ++s) {
                        if (is_ext[node * ns + s]) {
                            base += tab.weight[off + s] * ext_value[node * ns + s];
                            tab.weight[off + s] = 0.0;
                        }
                    }
                }
                tab.diag[static_cast<std::size_t>(c) * nodes + node] = std::max(diag, 0.0);
                tab.base[static_cast<std::size_t>(c) * nodes + node] = base;
            }
        }
    });
    return tab;
}

// out = G[w]; optionally records the argmax control per node. Returns the
// sup-norm residual |out - w|.
double apply_slice_map(const SliceTables& tab, std::span<const double> w,
                       std::span<double> out, std::vector<int>* argmax, int threads) {
    const std::int64_t nodes = tab.nodes;
    const int ns = tab.n_signed;
    const int n_ctrl = tab.n_ctrl;
    std::atomic<double> resid{0.0};

    parallel_for(nodes, threads, [&](std::int64_t lo, std::int64_t hi) {
        double local = 0.0;
        for (std::int64_t node = lo; node < hi; ++node) {
            double best = -std::numeric_limits<double>::infinity();
            int best_c = 0;
            const double wc = w[node];
            for (int c = 0; c < n_ctrl; ++c) {
                const std::size_t row = static_cast<std::size_t>(c) * nodes + node;
                double acc = tab.base[row] + tab.diag[row] * wc;
                const double* wt = &tab.weight[row * ns];
                const std::int64_t* nb = &tab.nbr[node * ns];
                for (int s = 0; s < ns; ++s) acc += wt[s] * w[nb[s]];
                if (acc > best) {
                    best = acc;
                    best_c = c;
                }
            }
            out[node] = best;
            if (argmax) (*argmax)[node] = best_c;
            local = std::max(local, std::abs(best - wc));
        }
        double cur = resid.load(std::memory_order_relaxed);
        while (cur < local && !resid.compare_exchange_weak(cur, local)) {
        }
    });
    return resid.load();
}

// Gauss-Seidel sweeps on the frozen-policy linear slice system
//   w (1 - diag) = base + sum_s weight_s w(nbr_s).
void solve_frozen_policy(const SliceTables& tab, const std::vector<int>& policy,
                         std::vector<double>& w, double tol, long max_sweeps) {
    const std::int64_t nodes = tab.nodes;
    const int ns = tab.n_signed;
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::int64_t node = 0; node < nodes; ++node) {
            const std::size_t row = static_cast<std::size_t>(policy[node]) * nodes + node;
            double acc = tab.base[row];
            const double* wt = &tab.weight[row * ns];
            const std::int64_t* nb = &tab.nbr[node * ns];
            for (int s = 0; s < ns; ++s) acc += wt[s] * w[nb[s]];
            const double denom = 1.0 - tab.diag[row];
            const double next = acc / denom;
            change = std::max(change, std::abs(next - w[node]));
            w[node] = next;
        }
        if (change <= tol) return;
    }
}

}  // namespace

double max_coefficient_rate(const ControlProblem& problem, const Mesh& mesh,
                            std::span<const double> times) {
    const int d1 = mesh.num_directions();
    const double h = mesh.h();
    const std::int64_t nodes = mesh.num_nodes();
    std::atomic<double> max_rate{0.0};
    parallel_for(nodes, 0, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> x(mesh.dim());
        double local = 0.0;
        for (std::int64_t node = lo; node < hi; ++node) {
            mesh.position(node, x);
            for (double t : times) {
                for (std::size_t c = 0; c < problem.num_controls(); ++c) {
                    double rate = 0.0;
                    for (int k = 1; k <= d1; ++k) {
                        const double a =
                            checked_coeff(problem.diffusion(c, k, t, x), "sigma", c, t, x);
                        const double bp =
                            checked_coeff(problem.drift(c, k, t, x), "b", c, t, x);
                        const double bm =
                            checked_coeff(problem.drift(c, -k, t, x), "b", c, t, x);
                        rate += 2.0 * a / (h * h) + (bp + bm) / h;
                    }
                    rate += checked_coeff(problem.discount(c, t, x), "c", c, t, x);
                    local = std::max(local, rate);
                }
            }
        }
        double cur = max_rate.load(std::memory_order_relaxed);
        while (cur < local && !max_rate.compare_exchange_weak(cur, local)) {
        }
    });
    return max_rate.load();
}

ContractionParams choose_contraction_params(const ControlProblem& problem, const Mesh& mesh) {
    ContractionParams params;
    params.gamma = 1.0;
    params.max_rate = max_coefficient_rate(problem, mesh, mesh.time_levels());
    params.epsilon = 0.95 / (1.0 / mesh.tau() + params.max_rate);
    params.contraction_factor = 1.0 - params.epsilon / mesh.tau();
    return params;
}

std::vector<double> slice_fixed_point_map(const ControlProblem& problem, const Mesh& mesh,
                                          const ContractionParams& params,
                                          std::span<const double> u_next,
                                          std::span<const double> w, int level,
                                          const SolverConfig& config) {
    const SliceTables tab = build_slice_tables(problem, mesh, params, u_next, level, config);
    std::vector<double> out(mesh.num_nodes());
    apply_slice_map(tab, w, out, nullptr, config.threads);
    return out;
}

std::pair<std::vector<double>, SliceSolveStats> solve_slice(
    const ControlProblem& problem, const Mesh& mesh, const ContractionParams& params,
    std::span<const double> u_next, int level, const SolverConfig& config) {
    const SliceTables tab = build_slice_tables(problem, mesh, params, u_next, level, config);
    const double thresh =
        std::max(config.tol * (1.0 - params.contraction_factor), 1e-300);

    std::vector<double> w(u_next.begin(), u_next.end());
    std::vector<double> out(w.size());
    SliceSolveStats stats;
    stats.method = config.method;

    if (config.method == SliceMethod::banach) {
        for (long iter = 1; iter <= config.max_iterations; ++iter) {
            const double resid = apply_slice_map(tab, w, out, nullptr, config.threads);
            w.swap(out);
            if (resid <= thresh) {
                stats.iterations = iter;
                stats.final_residual = resid;
                return {std::move(w), stats};
            }
        }
        const double last = apply_slice_map(tab, w, out, nullptr, config.threads);
        throw ConvergenceError("banach slice iteration exceeded max_iterations", last);
    }

    // Howard: alternate policy improvement with frozen-policy linear solves.
    std::vector<int> policy(w.size(), -1);
    std::vector<int> prev_policy(w.size(), -1);
    for (long outer = 1; outer <= config.max_policy_iterations; ++outer) {
        const double resid = apply_slice_map(tab, w, out, &policy, config.threads);
        w.swap(out);
        stats.iterations = outer;
        stats.final_residual = resid;
        if (resid <= thresh && policy == prev_policy) return {std::move(w), stats};
        prev_policy = policy;
        solve_frozen_policy(tab, policy, w, 0.1 * thresh, config.max_iterations);
    }
    throw ConvergenceError("howard policy iteration exceeded max_policy_iterations",
                           stats.final_residual);
}

ParabolicSolution solve_parabolic(const ControlProblem& problem, const Mesh& mesh,
                                  const SolverConfig& config) {
    SolverConfig cfg = config;
    if (cfg.exterior.kind == ExteriorPolicy::Kind::extend_terminal && !cfg.exterior.terminal)
        cfg.exterior.terminal = problem.terminal;

    ParabolicSolution sol;
    sol.params = choose_contraction_params(problem, mesh);
    sol.values = GridFunction(std::make_shared<const Mesh>(mesh));

    const int n = mesh.n_time();
    const std::int64_t nodes = mesh.num_nodes();
    {
        auto terminal_level = sol.values.level(n);
        std::vector<double> x(mesh.dim());
        for (std::int64_t node = 0; node < nodes; ++node) {
            mesh.position(node, x);
            terminal_level[node] = problem.terminal(x);
            if (!std::isfinite(terminal_level[node]))
                throw EvaluationError("terminal data non-finite at a mesh node");
        }
    }

    sol.slice_stats.resize(n);
    for (int j = n - 1; j >= 0; --j) {
        try {
            auto [slice, stats] = solve_slice(problem, mesh, sol.params, sol.values.level(j + 1),
                                              j, cfg);
            std::copy(slice.begin(), slice.end(), sol.values.level(j).begin());
            sol.slice_stats[j] = stats;
        } catch (const ConvergenceError& ex) {
            throw ConvergenceError("slice " + std::to_string(j) + ": " + ex.what(),
                                   ex.last_residual());
        }
        for (double v : sol.values.level(j)) {
            if (!std::isfinite(v))
                throw ConvergenceError("slice " + std::to_string(j) + " produced non-finite values",
                                       0.0);
        }
    }
    return sol;
}

}  // namespace bellman
