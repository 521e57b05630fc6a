#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "bellman/grid_io.hpp"
#include "bellman/mesh.hpp"

using namespace bellman;

TEST_CASE("grid csv round trip") {
    MeshSpec spec;
    spec.horizon = 1.0;
    spec.tau = 0.4;
    spec.h = 0.5;
    spec.index_radius = 2;
    spec.directions = {{1.0, 0.5}, {0.0, 1.0}};
    spec.origin = {0.25, -1.0};
    auto mesh = std::make_shared<const Mesh>(build_mesh(spec));
    GridFunction u(mesh);
    for (int j = 0; j < mesh->num_levels(); ++j)
        for (std::int64_t n = 0; n < mesh->num_nodes(); ++n)
            u.at(j, n) = 0.1 * j + 1e-3 * static_cast<double>(n) - 0.05;

    std::stringstream ss;
    write_grid_csv(ss, u);
    const GridFunction back = read_grid_csv(ss);
    CHECK(back.mesh().num_levels() == mesh->num_levels());
    CHECK(back.mesh().num_nodes() == mesh->num_nodes());
    CHECK(back.mesh().spec().directions == spec.directions);
    CHECK(back.mesh().spec().origin == spec.origin);
    for (int j = 0; j < mesh->num_levels(); ++j)
        for (std::int64_t n = 0; n < mesh->num_nodes(); ++n)
            CHECK(back.at(j, n) == u.at(j, n));  // bit-exact via shortest round trip
}

TEST_CASE("grid csv golden header") {
    MeshSpec spec;
    spec.horizon = 1.0;
    spec.tau = 0.5;
    spec.h = 0.25;
    spec.index_radius = 1;
    spec.directions = {{1.0}};
    spec.origin = {0.0};
    auto mesh = std::make_shared<const Mesh>(build_mesh(spec));
    GridFunction u(mesh);
    u.at(0, 0) = -0.5;
    u.at(2, 2) = 0.125;
    std::stringstream ss;
    write_grid_csv(ss, u);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "1,0.5,0.25,1,1,1,1,0");
    std::getline(ss, line);
    CHECK(line == "0,-1,-0.5");
}

TEST_CASE("grid csv output is byte-stable across repeated writes") {
    MeshSpec spec;
    spec.horizon = 0.3;
    spec.tau = 0.07;
    spec.h = 0.11;
    spec.index_radius = 3;
    spec.directions = {{1.0}};
    spec.origin = {0.0};
    auto mesh = std::make_shared<const Mesh>(build_mesh(spec));
    GridFunction u(mesh);
    for (int j = 0; j < mesh->num_levels(); ++j)
        for (std::int64_t n = 0; n < mesh->num_nodes(); ++n)
            u.at(j, n) = std::sin(j + 0.1 * static_cast<double>(n));
    std::stringstream a, b;
    write_grid_csv(a, u);
    write_grid_csv(b, u);
    CHECK(a.str() == b.str());
}

TEST_CASE("grid csv rejects malformed input") {
    std::stringstream empty;
    CHECK_THROWS(read_grid_csv(empty));
    std::stringstream bad("1,0.5,0.25,1,1,1,1,0\n0,zzz,1\n");
    CHECK_THROWS(read_grid_csv(bad));
    std::stringstream missing("1,0.5,0.25,1,1,1,1,0\n0,-1,-0.5\n");
    CHECK_THROWS(read_grid_csv(missing));
}
