#include "bellman/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bellman {

namespace {

struct SplitMix {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

std::string point_context(std::size_t alpha, int k, double t, std::span<const double> x) {
    std::ostringstream os;
    os << "alpha=" << alpha;
    if (k != 0) os << ", k=" << k;
    os << ", t=" << t << ", x=(";
    for (std::size_t m = 0; m < x.size(); ++m) os << (m ? "," : "") << x[m];
    os << ")";
    return os.str();
}

}  // namespace

ValidationReport validate(const ControlProblem& problem, const Mesh& mesh, std::uint64_t seed) {
    ValidationReport report;
    SplitMix rng{seed};

    auto hard = [&](const std::string& msg) {
        report.pass = false;
        if (report.violations.size() < 32) report.violations.push_back(msg);
    };

    if (problem.controls.empty()) hard("problem has no controls");
    const int d1 = problem.num_directions;
    if (d1 != mesh.num_directions()) hard("problem/mesh direction count mismatch");
    for (std::size_t a = 0; a < problem.num_controls(); ++a) {
        const auto& c = problem.controls[a];
        if (static_cast<int>(c.sigma.size()) != d1 ||
            static_cast<int>(c.drift.size()) != 2 * d1 || !c.discount || !c.source) {
            hard("control " + std::to_string(a) + " has missing evaluators");
        }
    }
    if (!problem.terminal) hard("terminal evaluator missing");
    if (!report.pass) return report;

    for (const auto& l : mesh.spec().directions) {
        double n2 = 0.0;
        for (double v : l) n2 += v * v;
        if (std::sqrt(n2) > problem.bound * (1.0 + 1e-12)) report.bound_exceeded = true;
    }

    // Sampled mesh nodes and time levels.
    const std::int64_t nodes = mesh.num_nodes();
    const std::int64_t node_stride = std::max<std::int64_t>(1, nodes / 256);
    std::vector<std::int64_t> sample_nodes;
    for (std::int64_t i = 0; i < nodes; i += node_stride) sample_nodes.push_back(i);
    const int levels = mesh.num_levels();
    const int level_stride = std::max(1, levels / 16);
    std::vector<double> sample_times;
    for (int j = 0; j < levels; j += level_stride) sample_times.push_back(mesh.time_levels()[j]);
    if (sample_times.empty() || sample_times.back() != mesh.horizon())
        sample_times.push_back(mesh.horizon());

    const double lambda = problem.lambda;
    auto track_value = [&](double v) {
        report.max_abs_value = std::max(report.max_abs_value, std::abs(v));
    };

    std::vector<double> x(mesh.dim());
    for (std::int64_t node : sample_nodes) {
        mesh.position(node, x);
        for (double t : sample_times) {
            for (std::size_t a = 0; a < problem.num_controls(); ++a) {
                for (int k = 1; k <= d1; ++k) {
                    const double s = problem.sigma(a, k, t, x);
                    if (!std::isfinite(s)) hard("sigma non-finite at " + point_context(a, k, t, x));
                    track_value(s);
                }
                for (int k = -d1; k <= d1; ++k) {
                    if (k == 0) continue;
                    const double b = problem.drift(a, k, t, x);
                    if (!std::isfinite(b)) hard("b non-finite at " + point_context(a, k, t, x));
                    if (b < 0.0) hard("b_k < 0 at " + point_context(a, k, t, x));
                    track_value(b);
                }
                const double c = problem.discount(a, t, x);
                if (!std::isfinite(c)) hard("c non-finite at " + point_context(a, 0, t, x));
                if (c < lambda) hard("c < lambda at " + point_context(a, 0, t, x));
                track_value(c - lambda);
                const double f = problem.source(a, t, x);
                if (!std::isfinite(f)) hard("f non-finite at " + point_context(a, 0, t, x));
                track_value(f);
            }
            if (report.violations.size() >= 32) break;
        }
        const double g = problem.terminal(x);
        if (!std::isfinite(g)) hard("g non-finite at x sample");
        track_value(g);
        if (report.violations.size() >= 32) break;
    }

    // Random point pairs for observed Lipschitz-in-x and Hoelder-1/2-in-t
    // quotients; sampling evidence only, never a proof.
    const double box = mesh.h() * mesh.index_radius();
    const int pairs = 512;
    std::vector<double> y(mesh.dim());
    for (int p = 0; p < pairs; ++p) {
        for (int m = 0; m < mesh.dim(); ++m) {
            x[m] = mesh.spec().origin[m] + rng.uniform(-box, box);
            y[m] = mesh.spec().origin[m] + rng.uniform(-box, box);
        }
        double dist = 0.0;
        for (int m = 0; m < mesh.dim(); ++m) dist += (x[m] - y[m]) * (x[m] - y[m]);
        dist = std::sqrt(dist);
        if (dist < 1e-9) continue;
        const double t = rng.uniform(0.0, mesh.horizon());
        const double s = rng.uniform(0.0, mesh.horizon());
        const double dt_root = std::sqrt(std::abs(t - s));

        auto space_quot = [&](double vx, double vy) {
            report.max_space_quotient =
                std::max(report.max_space_quotient, std::abs(vx - vy) / dist);
        };
        auto time_quot = [&](double vt, double vs) {
            if (dt_root > 1e-6)
                report.max_time_quotient_sqrt =
                    std::max(report.max_time_quotient_sqrt, std::abs(vt - vs) / dt_root);
        };
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            for (int k = 1; k <= d1; ++k) {
                space_quot(problem.sigma(a, k, t, x), problem.sigma(a, k, t, y));
                time_quot(problem.sigma(a, k, t, x), problem.sigma(a, k, s, x));
                space_quot(problem.drift(a, k, t, x), problem.drift(a, k, t, y));
                space_quot(problem.drift(a, -k, t, x), problem.drift(a, -k, t, y));
                time_quot(problem.drift(a, k, t, x), problem.drift(a, k, s, x));
            }
            space_quot(problem.discount(a, t, x), problem.discount(a, t, y));
            time_quot(problem.discount(a, t, x), problem.discount(a, s, x));
            space_quot(problem.source(a, t, x), problem.source(a, t, y));
            time_quot(problem.source(a, t, x), problem.source(a, s, x));
        }
        space_quot(problem.terminal(x), problem.terminal(y));
    }

    report.bound_exceeded = report.bound_exceeded ||
                            report.max_abs_value > problem.bound * (1.0 + 1e-9) ||
                            report.max_space_quotient > problem.bound * (1.0 + 1e-9);
    return report;
}

}  // namespace bellman
