#include "bellman/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "bellman/fd_ops.hpp"
#include "bellman/parallel.hpp"

namespace bellman {

namespace {

bool node_interior(const Mesh& mesh, std::int64_t node, int margin) {
    const int R = mesh.index_radius();
    for (int k = 1; k <= mesh.num_directions(); ++k) {
        if (std::abs(mesh.component(node, k)) > R - margin) return false;
    }
    return true;
}

}  // namespace

RegularityReport measure_regularity(const GridFunction& u, int threads) {
    const Mesh& mesh = u.mesh();
    const int d1 = mesh.num_directions();
    const int levels = mesh.num_levels();
    const std::int64_t nodes = mesh.num_nodes();

    std::vector<double> dir_norm(d1);
    for (int k = 0; k < d1; ++k) {
        double n2 = 0.0;
        for (double v : mesh.spec().directions[k]) n2 += v * v;
        dir_norm[k] = std::sqrt(n2);
    }

    std::atomic<double> lip{0.0};
    std::atomic<double> hold{0.0};
    const auto& times = mesh.time_levels();
    parallel_for(nodes, threads, [&](std::int64_t lo, std::int64_t hi) {
        double local_lip = 0.0;
        double local_hold = 0.0;
        for (std::int64_t node = lo; node < hi; ++node) {
            for (int k = 1; k <= d1; ++k) {
                if (dir_norm[k - 1] == 0.0) continue;
                const std::int64_t nb = mesh.neighbor_index(node, k);
                if (nb < 0) continue;
                const double denom = mesh.h() * dir_norm[k - 1];
                for (int j = 0; j < levels; ++j) {
                    local_lip =
                        std::max(local_lip, std::abs(u.at(j, nb) - u.at(j, node)) / denom);
                }
            }
            for (int j = 0; j < levels; ++j) {
                for (int j2 = j + 1; j2 < levels; ++j2) {
                    const double dt = times[j2] - times[j];
                    if (dt > 1.0) break;
                    local_hold = std::max(
                        local_hold, std::abs(u.at(j2, node) - u.at(j, node)) / std::sqrt(dt));
                }
            }
        }
        double cur = lip.load(std::memory_order_relaxed);
        while (cur < local_lip && !lip.compare_exchange_weak(cur, local_lip)) {
        }
        cur = hold.load(std::memory_order_relaxed);
        while (cur < local_hold && !hold.compare_exchange_weak(cur, local_hold)) {
        }
    });

    RegularityReport report;
    report.lipschitz_x = lip.load();
    report.holder_t = hold.load();
    report.c0_used = 0.0;
    return report;
}

ComparisonReport check_comparison(const ControlProblem& p1, const ControlProblem& p2,
                                  const Mesh& mesh, const SolverConfig& config) {
    ComparisonReport report;
    if (p1.num_controls() != p2.num_controls() || p1.num_directions != p2.num_directions) {
        report.applicable = false;
        report.note = "problems do not share a control structure";
        return report;
    }

    // Sampled precondition: f1 <= f2 control-wise and g1 <= g2.
    const std::int64_t stride = std::max<std::int64_t>(1, mesh.num_nodes() / 512);
    std::vector<double> x(mesh.dim());
    for (std::int64_t node = 0; node < mesh.num_nodes(); node += stride) {
        mesh.position(node, x);
        if (p1.terminal(x) > p2.terminal(x) + 1e-12) {
            report.applicable = false;
            report.note = "terminal ordering g1 <= g2 fails under sampling";
            return report;
        }
        for (double t : mesh.time_levels()) {
            for (std::size_t c = 0; c < p1.num_controls(); ++c) {
                if (p1.source(c, t, x) > p2.source(c, t, x) + 1e-12) {
                    report.applicable = false;
                    report.note = "source ordering f1 <= f2 fails under sampling";
                    return report;
                }
            }
        }
    }

    const auto u1 = solve_parabolic(p1, mesh, config);
    const auto u2 = solve_parabolic(p2, mesh, config);
    double violation = 0.0;
    for (int j = 0; j < mesh.num_levels(); ++j) {
        auto s1 = u1.values.level(j);
        auto s2 = u2.values.level(j);
        for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
            violation = std::max(violation, s1[node] - s2[node]);
        }
    }
    report.max_violation = std::max(violation, 0.0);
    report.pass = report.max_violation <= 1e-8;
    return report;
}

double interior_sup_error(const GridFunction& u, const ExactSolution& oracle,
                          int margin_layers) {
    const Mesh& mesh = u.mesh();
    if (mesh.index_radius() - margin_layers < 1)
        throw std::invalid_argument(
            "interior_sup_error: no interior left after the margin; increase index_radius");
    double err = 0.0;
    std::vector<double> x(mesh.dim());
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
        if (!node_interior(mesh, node, margin_layers)) continue;
        mesh.position(node, x);
        for (int j = 0; j < mesh.num_levels(); ++j) {
            err = std::max(err,
                           std::abs(u.at(j, node) - oracle.value(mesh.time_levels()[j], x)));
        }
    }
    return err;
}

std::pair<double, double> fit_order(std::span<const double> hs, std::span<const double> errors) {
    const std::size_t n = hs.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(hs[i]);
        const double ly = std::log(errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return {slope, std::exp(intercept)};
}

ConvergenceReport convergence_study(const ControlProblem& problem, const ExactSolution& oracle,
                                    const std::vector<MeshSpec>& meshes,
                                    const SolverConfig& config, Scheme scheme,
                                    int margin_override) {
    if (meshes.size() < 3)
        throw std::invalid_argument("convergence_study: need at least 3 meshes for a fit");

    ConvergenceReport report;
    for (const MeshSpec& spec : meshes) {
        const Mesh mesh = build_mesh(spec);
        GridFunction u;
        if (scheme == Scheme::implicit_fd) {
            u = solve_parabolic(problem, mesh, config).values;
        } else {
            SemidiscreteConfig sd;
            sd.exterior = config.exterior;
            sd.threads = config.threads;
            u = solve_semidiscrete(problem, mesh, sd);
        }
        const int margin =
            margin_override >= 0
                ? margin_override
                : static_cast<int>(std::ceil(problem.bound * spec.horizon / spec.h));
        report.taus.push_back(spec.tau);
        report.hs.push_back(spec.h);
        report.errors.push_back(interior_sup_error(u, oracle, margin));
    }

    for (std::size_t i = 0; i + 1 < report.errors.size(); ++i) {
        const double ratio = report.errors[i] / report.errors[i + 1];
        const double hratio = report.hs[i] / report.hs[i + 1];
        report.pairwise_orders.push_back(std::log(ratio) / std::log(hratio));
    }

    if (*std::max_element(report.errors.begin(), report.errors.end()) <= 1e-10) {
        report.degenerate = true;
        return report;
    }
    auto [order, constant] = fit_order(report.hs, report.errors);
    report.fitted_order = order;
    report.fitted_constant = constant;
    return report;
}

EllipticLimitReport check_elliptic_limit(const ControlProblem& problem, const Mesh& mesh,
                                         const std::vector<double>& horizons,
                                         const EllipticConfig& config) {
    EllipticConfig vi = config;
    vi.mode = EllipticMode::value_iteration;
    const EllipticSolution stationary = solve_elliptic(problem, mesh, vi);

    ControlProblem zero_terminal = problem;
    zero_terminal.terminal = [](std::span<const double>) { return 0.0; };
    SolverConfig inner;
    inner.tol = std::min(1e-10, 0.01 * config.tol);
    inner.exterior = config.exterior;
    inner.threads = config.threads;

    EllipticLimitReport report;
    for (double T : horizons) {
        MeshSpec spec = mesh.spec();
        spec.horizon = T;
        spec.tau = config.horizon_tau;
        const Mesh horizon_mesh = build_mesh(spec);
        const auto parabolic = solve_parabolic(zero_terminal, horizon_mesh, inner);
        double gap = 0.0;
        auto slice = parabolic.values.level(0);
        for (std::int64_t node = 0; node < horizon_mesh.num_nodes(); ++node) {
            gap = std::max(gap, std::abs(slice[node] - stationary.u[node]));
        }
        report.horizons.push_back(T);
        report.gaps.push_back(gap);
    }
    report.final_gap = report.gaps.empty() ? 0.0 : report.gaps.back();
    for (std::size_t i = 0; i + 1 < report.gaps.size(); ++i) {
        if (report.gaps[i + 1] > 0.5 * report.gaps[i] + 1e-12) report.geometric_decay = false;
    }
    return report;
}

ObstacleResiduals check_obstacle_complementarity(std::span<const double> u, const SpaceFn& g_obs,
                                                 const Mesh& mesh, double a_continue,
                                                 double c_continue, double margin,
                                                 const ExteriorPolicy& exterior) {
    ObstacleResiduals res;
    const double h = mesh.h();
    std::vector<double> x(mesh.dim());
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
        if (!node_interior(mesh, node, 1)) continue;
        mesh.position(node, x);
        const double center = u[node];
        double lap = 0.0;
        for (int k = 1; k <= mesh.num_directions(); ++k) {
            const double up = neighbor_value(mesh, u, node, k, exterior);
            const double dn = neighbor_value(mesh, u, node, -k, exterior);
            lap += (up - 2.0 * center + dn) / (h * h);
        }
        const double linear = a_continue * lap - c_continue * center;
        const double obstacle = g_obs(x);
        res.operator_positive_part = std::max(res.operator_positive_part, linear);
        res.obstacle_violation = std::max(res.obstacle_violation, obstacle - center);
        if (center > obstacle + margin) {
            res.active_set_residual = std::max(res.active_set_residual, std::abs(linear));
        }
    }
    res.operator_positive_part = std::max(res.operator_positive_part, 0.0);
    res.obstacle_violation = std::max(res.obstacle_violation, 0.0);
    return res;
}

}  // namespace bellman
