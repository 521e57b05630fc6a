#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>

#include "bellman/mesh.hpp"

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

}  // namespace

TEST_CASE("time levels are (j tau) ^ T") {
    SUBCASE("T a multiple of tau") {
        const Mesh mesh = build_mesh(spec_1d(1.0, 0.25, 0.5, 2));
        REQUIRE(mesh.num_levels() == 5);
        CHECK(mesh.time_levels()[0] == 0.0);
        CHECK(mesh.time_levels()[1] == 0.25);
        CHECK(mesh.time_levels()[2] == 0.5);
        CHECK(mesh.time_levels()[3] == 0.75);
        CHECK(mesh.time_levels()[4] == 1.0);
    }
    SUBCASE("short final step") {
        const Mesh mesh = build_mesh(spec_1d(1.0, 0.4, 0.5, 2));
        REQUIRE(mesh.num_levels() == 4);
        CHECK(mesh.time_levels()[2] == doctest::Approx(0.8));
        CHECK(mesh.time_levels()[3] == 1.0);
        CHECK(mesh.time_levels()[3] - mesh.time_levels()[2] == doctest::Approx(0.2));
    }
    SUBCASE("uniform spacing except the last gap") {
        const Mesh mesh = build_mesh(spec_1d(2.0, 0.07, 0.5, 2));
        const auto& t = mesh.time_levels();
        for (int j = 0; j + 2 < mesh.num_levels(); ++j) {
            CHECK(t[j + 1] - t[j] == doctest::Approx(0.07).epsilon(1e-12));
        }
        const double last = t[mesh.num_levels() - 1] - t[mesh.num_levels() - 2];
        CHECK(last > 0.0);
        CHECK(last <= 0.07 + 1e-12);
    }
}

TEST_CASE("positions are affine in the multi-index") {
    const Mesh mesh = build_mesh(spec_1d(1.0, 0.5, 0.5, 2));
    REQUIRE(mesh.num_nodes() == 5);
    std::vector<double> seen;
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node)
        seen.push_back(mesh.position(node)[0]);
    std::sort(seen.begin(), seen.end());
    const std::vector<double> want = {-1.0, -0.5, 0.0, 0.5, 1.0};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(seen[i] == doctest::Approx(want[i]));
}

TEST_CASE("mesh spec round trip") {
    const MeshSpec spec = spec_1d(1.3, 0.21, 0.05, 7);
    const Mesh mesh = build_mesh(spec);
    CHECK(mesh.horizon() == spec.horizon);
    CHECK(mesh.tau() == spec.tau);
    CHECK(mesh.h() == spec.h);
    CHECK(mesh.index_radius() == spec.index_radius);
    CHECK(mesh.n_time() == mesh.num_levels() - 1);
}

TEST_CASE("mesh rejects bad specs") {
    CHECK_THROWS_AS(build_mesh(spec_1d(0.0, 0.1, 0.1, 2)), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(spec_1d(1.0, -0.1, 0.1, 2)), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(spec_1d(1.0, 0.1, 0.0, 2)), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(spec_1d(1.0, 0.1, 0.1, 0)), std::invalid_argument);
    MeshSpec no_dirs = spec_1d(1.0, 0.1, 0.1, 2);
    no_dirs.directions.clear();
    CHECK_THROWS_AS(build_mesh(no_dirs), std::invalid_argument);
}

TEST_CASE("non-spanning directions are allowed") {
    // Two copies of the same direction: the lattice lives on a line in R^2
    // but index space stays well-formed.
    MeshSpec spec;
    spec.horizon = 1.0;
    spec.tau = 0.5;
    spec.h = 0.25;
    spec.index_radius = 3;
    spec.directions = {{1.0, 0.0}, {1.0, 0.0}};
    spec.origin = {0.0, 0.0};
    const Mesh mesh = build_mesh(spec);
    CHECK(mesh.num_nodes() == 49);
    std::vector<int> multi(2);
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
        mesh.decode(node, multi);
        CHECK(mesh.encode(multi) == node);
    }
}

TEST_CASE("encode/decode round trip in 2-d") {
    MeshSpec spec;
    spec.horizon = 1.0;
    spec.tau = 0.5;
    spec.h = 0.1;
    spec.index_radius = 4;
    spec.directions = {{1.0, 0.0}, {0.0, 1.0}};
    spec.origin = {0.5, -0.5};
    const Mesh mesh = build_mesh(spec);
    std::vector<int> multi(2);
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
        mesh.decode(node, multi);
        CHECK(mesh.encode(multi) == node);
        const auto x = mesh.position(node);
        CHECK(x[0] == doctest::Approx(0.5 + 0.1 * multi[0]));
        CHECK(x[1] == doctest::Approx(-0.5 + 0.1 * multi[1]));
    }
}

TEST_CASE("tau_T") {
    const Mesh mesh = build_mesh(spec_1d(1.0, 0.4, 0.5, 2));
    CHECK(tau_T(mesh, 0.0) == doctest::Approx(0.4));
    CHECK(tau_T(mesh, 0.4) == doctest::Approx(0.4));
    CHECK(tau_T(mesh, 0.8) == doctest::Approx(0.2));
    SUBCASE("t + tau_T(t) = (t + tau) ^ T") {
        for (int j = 0; j + 1 < mesh.num_levels(); ++j) {
            const double t = mesh.time_levels()[j];
            CHECK(t + tau_T(mesh, t) ==
                  doctest::Approx(std::min(t + mesh.tau(), mesh.horizon())));
        }
    }
    CHECK_THROWS_AS(tau_T(mesh, 1.0), std::domain_error);
    CHECK_THROWS_AS(tau_T(mesh, 1.7), std::domain_error);
    CHECK_THROWS_AS(tau_T(mesh, 0.3), std::domain_error);
}

TEST_CASE("neighbor_value resolves exterior steps by policy") {
    auto mesh = std::make_shared<const Mesh>(build_mesh(spec_1d(1.0, 0.5, 0.5, 1)));
    GridFunction u(mesh);
    // nodes at x = -0.5, 0, 0.5
    for (std::int64_t node = 0; node < mesh->num_nodes(); ++node)
        u.at(0, node) = mesh->position(node)[0];

    std::vector<int> center_multi = {0};
    const std::int64_t center = mesh->encode(center_multi);
    std::vector<int> edge_multi = {1};
    const std::int64_t edge = mesh->encode(edge_multi);

    CHECK(neighbor_value(u, 0, center, 1, ExteriorPolicy::clamp()) == doctest::Approx(0.5));
    CHECK(neighbor_value(u, 0, center, -1, ExteriorPolicy::clamp()) == doctest::Approx(-0.5));
    // stepping off the box: clamp copies the nearest in-box value
    CHECK(neighbor_value(u, 0, edge, 1, ExteriorPolicy::clamp()) == doctest::Approx(0.5));
    // constant policy
    CHECK(neighbor_value(u, 0, edge, 1, ExteriorPolicy::constant(7.0)) == doctest::Approx(7.0));
    // terminal extension evaluates g at the exterior position x = 1.0
    auto g = [](std::span<const double> x) { return x[0] >= 1.0 - 1e-12 ? 0.0 : 99.0; };
    CHECK(neighbor_value(u, 0, edge, 1, ExteriorPolicy::extend_terminal(g)) ==
          doctest::Approx(0.0));
}

TEST_CASE("grid function shape and finiteness") {
    auto mesh = std::make_shared<const Mesh>(build_mesh(spec_1d(1.0, 0.25, 0.5, 2)));
    GridFunction u(mesh);
    CHECK(u.flat().size() == static_cast<std::size_t>(5 * 5));
    CHECK(u.all_finite());
    u.at(2, 3) = std::nan("");
    CHECK(!u.all_finite());
}
