#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "bellman/catalog.hpp"
#include "bellman/errors.hpp"
#include "bellman/implicit_solver.hpp"
#include "bellman/mesh.hpp"
#include "oracles.hpp"

using namespace bellman;

namespace {

MeshSpec spec_1d(double T, double tau, double h, int R) {
    MeshSpec s;
    s.horizon = T;
    s.tau = tau;
    s.h = h;
    s.index_radius = R;
    s.directions = {{1.0}};
    s.origin = {0.0};
    return s;
}

ControlProblem plain(double sigma, double c, double f_const) {
    ControlProblem p;
    p.dim = 1;
    p.num_directions = 1;
    ControlCoefficients ctrl;
    ctrl.sigma = {[sigma](double, std::span<const double>) { return sigma; }};
    ctrl.drift.resize(2);
    ctrl.drift[signed_slot(1)] = [](double, std::span<const double>) { return 0.0; };
    ctrl.drift[signed_slot(-1)] = [](double, std::span<const double>) { return 0.0; };
    ctrl.discount = [c](double, std::span<const double>) { return c; };
    ctrl.source = [f_const](double, std::span<const double>) { return f_const; };
    p.controls = {ctrl};
    p.terminal = [](std::span<const double>) { return 1.0; };
    p.bound = std::max({1.0, sigma, c, std::abs(f_const)});
    p.lambda = 0.0;
    return p;
}

}  // namespace

TEST_CASE("contraction parameter selection matches the stated formula") {
    SUBCASE("diffusion-dominated: a=1/2, tau=h^2=0.01") {
        const Mesh mesh = build_mesh(spec_1d(1.0, 0.01, 0.1, 5));
        const auto params = choose_contraction_params(plain(1.0, 0.0, 0.0), mesh);
        CHECK(params.epsilon == doctest::Approx(0.00475).epsilon(1e-12));
        CHECK(params.contraction_factor == doctest::Approx(0.525).epsilon(1e-12));
    }
    SUBCASE("reaction only: c=1, tau=0.1") {
        const Mesh mesh = build_mesh(spec_1d(1.0, 0.1, 0.1, 5));
        const auto params = choose_contraction_params(plain(0.0, 1.0, 0.0), mesh);
        CHECK(params.epsilon == doctest::Approx(0.95 / 11.0).epsilon(1e-12));
        CHECK(params.contraction_factor == doctest::Approx(1.0 - 0.95 / 1.1).epsilon(1e-12));
    }
    SUBCASE("zero coefficients, tau=1") {
        const Mesh mesh = build_mesh(spec_1d(2.0, 1.0, 0.1, 5));
        const auto params = choose_contraction_params(plain(0.0, 0.0, 0.0), mesh);
        CHECK(params.epsilon == doctest::Approx(0.95).epsilon(1e-12));
        CHECK(params.contraction_factor == doctest::Approx(0.05).epsilon(1e-12));
    }
}

TEST_CASE("slice map basics") {
    const Mesh mesh = build_mesh(spec_1d(1.0, 0.1, 0.2, 6));
    const auto p = plain(0.0, 1.0, 1.0);  // c=1, f=1: fixed point is 1
    const auto params = choose_contraction_params(p, mesh);
    SolverConfig config;
    const std::vector<double> ones(mesh.num_nodes(), 1.0);

    SUBCASE("the exact solution is a fixed point") {
        const auto out = slice_fixed_point_map(p, mesh, params, ones, ones, 0, config);
        for (double v : out) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("measured Lipschitz constant stays below delta") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> val(-1.0, 1.0);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> w1(mesh.num_nodes()), w2(mesh.num_nodes());
            for (auto& v : w1) v = val(rng);
            for (auto& v : w2) v = val(rng);
            const auto m1 = slice_fixed_point_map(p, mesh, params, ones, w1, 0, config);
            const auto m2 = slice_fixed_point_map(p, mesh, params, ones, w2, 0, config);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < w1.size(); ++i) {
                num = std::max(num, std::abs(m1[i] - m2[i]));
                den = std::max(den, std::abs(w1[i] - w2[i]));
            }
            CHECK(num <= params.contraction_factor * den + 1e-12);
        }
    }
    SUBCASE("monotone in w and u_next") {
        std::mt19937_64 rng(43);
        std::uniform_real_distribution<double> val(-1.0, 1.0);
        std::uniform_real_distribution<double> gap(0.0, 0.5);
        const CatalogEntry kink = catalog("transport_kink");
        const auto kink_params = choose_contraction_params(kink.problem, mesh);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> w1(mesh.num_nodes()), w2(mesh.num_nodes());
            std::vector<double> n1(mesh.num_nodes()), n2(mesh.num_nodes());
            for (std::size_t i = 0; i < w1.size(); ++i) {
                w1[i] = val(rng);
                w2[i] = w1[i] + gap(rng);
                n1[i] = val(rng);
                n2[i] = n1[i] + gap(rng);
            }
            const auto m1 = slice_fixed_point_map(kink.problem, mesh, kink_params, n1, w1, 0,
                                                  config);
            const auto m2 = slice_fixed_point_map(kink.problem, mesh, kink_params, n2, w2, 0,
                                                  config);
            for (std::size_t i = 0; i < w1.size(); ++i) CHECK(m1[i] <= m2[i] + 1e-13);
        }
    }
}

TEST_CASE("solve_slice agrees with the dense linear oracle") {
    const Mesh mesh = build_mesh(spec_1d(0.2, 0.1, 0.25, 2));  // 5 spatial nodes
    REQUIRE(mesh.num_nodes() == 5);
    ControlProblem p = plain(0.7, 0.4, 0.0);
    p.controls[0].drift[signed_slot(1)] = [](double, std::span<const double> x) {
        return 0.3 * (1.0 + std::sin(x[0]));
    };
    p.controls[0].source = [](double t, std::span<const double> x) {
        return std::cos(x[0]) + 0.2 * t;
    };
    const auto params = choose_contraction_params(p, mesh);
    SolverConfig config;
    std::vector<double> u_next(mesh.num_nodes());
    for (std::int64_t n = 0; n < mesh.num_nodes(); ++n)
        u_next[n] = std::sin(1.7 * mesh.position(n)[0]);

    const auto [mine, stats] = solve_slice(p, mesh, params, u_next, 0, config);
    const auto oracle = testing::dense_single_control_slice(p, mesh, u_next, 0);
    for (std::size_t i = 0; i < mine.size(); ++i)
        CHECK(mine[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
    CHECK(stats.final_residual <= config.tol);
}

TEST_CASE("banach and howard produce the same slice fields") {
    const CatalogEntry entry = catalog("transport_kink");
    MeshSpec spec = entry.default_mesh;
    spec.index_radius = 30;
    const Mesh mesh = build_mesh(spec);
    SolverConfig banach;
    SolverConfig howard;
    howard.method = SliceMethod::howard;
    const auto a = solve_parabolic(entry.problem, mesh, banach);
    const auto b = solve_parabolic(entry.problem, mesh, howard);
    double gap = 0.0;
    for (std::size_t i = 0; i < a.values.flat().size(); ++i)
        gap = std::max(gap, std::abs(a.values.flat()[i] - b.values.flat()[i]));
    CHECK(gap <= 1e-9);
}

TEST_CASE("const problem solves to 1 everywhere") {
    const CatalogEntry entry = catalog("const");
    const Mesh mesh = build_mesh(entry.default_mesh);
    const auto sol = solve_parabolic(entry.problem, mesh, SolverConfig{});
    for (double v : sol.values.flat()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& s : sol.slice_stats) CHECK(s.final_residual <= 1e-12);
}

TEST_CASE("parabolic solve matches the global fixed-point oracle (gamma = 0.5)") {
    const Mesh mesh = build_mesh(spec_1d(0.5, 0.13, 0.25, 3));  // 7 nodes, 5 levels
    testing::RandomProblemGen gen(99);
    for (int trial = 0; trial < 3; ++trial) {
        const ControlProblem p = gen.make(2, 0.0);
        const auto mine = solve_parabolic(p, mesh, SolverConfig{});
        const auto oracle = testing::global_fixed_point_solve(p, mesh, 0.5, 1e-13);
        double gap = 0.0;
        for (std::size_t i = 0; i < mine.values.flat().size(); ++i)
            gap = std::max(gap, std::abs(mine.values.flat()[i] - oracle.flat()[i]));
        CHECK(gap <= 1e-9);
    }
}

TEST_CASE("iteration caps raise ConvergenceError carrying the slice") {
    // heat data genuinely needs iterations per slice, so a cap of 2 trips
    const CatalogEntry entry = catalog("heat1d");
    const Mesh mesh = build_mesh(spec_1d(1.0, 0.1, 0.1, 4));
    SolverConfig config;
    config.max_iterations = 2;
    try {
        solve_parabolic(entry.problem, mesh, config);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& ex) {
        CHECK(std::string(ex.what()).find("slice") != std::string::npos);
        CHECK(ex.last_residual() > 0.0);
    }
}

TEST_CASE("discrete comparison principle on random ordered pairs") {
    const Mesh mesh = build_mesh(spec_1d(0.6, 0.11, 0.2, 8));
    testing::RandomProblemGen gen(1234);
    for (int trial = 0; trial < 10; ++trial) {
        const ControlProblem p1 = gen.make(2, 0.0);
        const ControlProblem p2 = testing::RandomProblemGen::bump(p1, gen.uniform(0.0, 1.0),
                                                                  gen.uniform(0.0, 1.0));
        const auto u1 = solve_parabolic(p1, mesh, SolverConfig{});
        const auto u2 = solve_parabolic(p2, mesh, SolverConfig{});
        for (std::size_t i = 0; i < u1.values.flat().size(); ++i)
            CHECK(u1.values.flat()[i] <= u2.values.flat()[i] + 1e-8);
    }
}

TEST_CASE("terminal data contraction: a constant bump moves the solution by at most the bump") {
    const Mesh mesh = build_mesh(spec_1d(0.6, 0.11, 0.2, 8));
    testing::RandomProblemGen gen(777);
    for (int trial = 0; trial < 5; ++trial) {
        const ControlProblem p1 = gen.make(2, 0.0);
        const double dg = gen.uniform(0.1, 0.7);
        const ControlProblem p2 = testing::RandomProblemGen::bump(p1, 0.0, dg);
        const auto u1 = solve_parabolic(p1, mesh, SolverConfig{});
        const auto u2 = solve_parabolic(p2, mesh, SolverConfig{});
        for (std::size_t i = 0; i < u1.values.flat().size(); ++i) {
            const double diff = u2.values.flat()[i] - u1.values.flat()[i];
            CHECK(diff >= -1e-9);
            CHECK(diff <= dg + 1e-9);
        }
    }
}

TEST_CASE("uniform bound |v| <= K(T+tau) + sup|g| for lambda = 0") {
    const Mesh mesh = build_mesh(spec_1d(0.7, 0.13, 0.2, 8));
    testing::RandomProblemGen gen(31);
    for (int trial = 0; trial < 5; ++trial) {
        const ControlProblem p = gen.make(2, 0.0);
        double sup_g = 0.0;
        std::vector<double> x(1);
        for (std::int64_t n = 0; n < mesh.num_nodes(); ++n) {
            mesh.position(n, x);
            sup_g = std::max(sup_g, std::abs(p.terminal(x)));
        }
        // K bounds |f| among the sampled coefficients; use the generator bound.
        const double K = p.bound;
        const auto sol = solve_parabolic(p, mesh, SolverConfig{});
        const double limit = K * (mesh.horizon() + mesh.tau()) + sup_g + 1e-9;
        for (double v : sol.values.flat()) CHECK(std::abs(v) <= limit);
    }
}

TEST_CASE("stability: uniform data perturbations move the solution by O(eta)") {
    const Mesh mesh = build_mesh(spec_1d(0.5, 0.1, 0.2, 8));
    testing::RandomProblemGen gen(555);
    const ControlProblem p = gen.make(2, 0.0);
    const auto base = solve_parabolic(p, mesh, SolverConfig{});
    for (double eta : {0.1, 0.01, 0.001}) {
        const ControlProblem moved = testing::RandomProblemGen::bump(p, eta, eta);
        const auto sol = solve_parabolic(moved, mesh, SolverConfig{});
        double gap = 0.0;
        for (std::size_t i = 0; i < sol.values.flat().size(); ++i)
            gap = std::max(gap, std::abs(sol.values.flat()[i] - base.values.flat()[i]));
        // |gap| <= eta (1 + T) for f and g bumps of size eta; allow factor 2
        CHECK(gap <= 2.0 * (1.0 + mesh.horizon()) * eta);
        CHECK(gap >= 0.0);
    }
}

TEST_CASE("solver is deterministic for one thread and stable across thread counts") {
    const CatalogEntry entry = catalog("transport_kink");
    MeshSpec spec = entry.default_mesh;
    spec.index_radius = 20;
    const Mesh mesh = build_mesh(spec);
    SolverConfig one;
    one.threads = 1;
    const auto a = solve_parabolic(entry.problem, mesh, one);
    const auto b = solve_parabolic(entry.problem, mesh, one);
    for (std::size_t i = 0; i < a.values.flat().size(); ++i)
        CHECK(a.values.flat()[i] == b.values.flat()[i]);
    SolverConfig four;
    four.threads = 4;
    const auto c = solve_parabolic(entry.problem, mesh, four);
    for (std::size_t i = 0; i < a.values.flat().size(); ++i)
        CHECK(std::abs(a.values.flat()[i] - c.values.flat()[i]) <= 1e-9);
}
