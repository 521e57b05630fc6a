// Python bindings for the core operations: solving, rate studies,
// shaking and the difference operators themselves.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>

#include "bellman/aux_solvers.hpp"
#include "bellman/catalog.hpp"
#include "bellman/diagnostics.hpp"
#include "bellman/fd_ops.hpp"
#include "bellman/grid_io.hpp"
#include "bellman/implicit_solver.hpp"
#include "bellman/perturbation.hpp"

namespace py = pybind11;
using namespace bellman;

namespace {

CatalogEntry resolve(const std::string& problem, const std::string& problem_file) {
    if (!problem_file.empty()) return load_problem_file(problem_file);
    return catalog(problem);
}

MeshSpec override_mesh(MeshSpec spec, std::optional<double> T, std::optional<double> tau,
                       std::optional<double> h, std::optional<int> R) {
    if (T) spec.horizon = *T;
    if (tau) spec.tau = *tau;
    if (h) spec.h = *h;
    if (R) spec.index_radius = *R;
    return spec;
}

py::dict grid_to_dict(const GridFunction& u) {
    const Mesh& mesh = u.mesh();
    py::dict out;
    out["times"] = mesh.time_levels();
    std::vector<std::vector<double>> values(mesh.num_levels());
    for (int j = 0; j < mesh.num_levels(); ++j)
        values[j].assign(u.level(j).begin(), u.level(j).end());
    out["values"] = values;
    std::vector<std::vector<double>> positions;
    positions.reserve(static_cast<std::size_t>(mesh.num_nodes()));
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node)
        positions.push_back(mesh.position(node));
    out["positions"] = positions;
    out["tau"] = mesh.tau();
    out["h"] = mesh.h();
    out["T"] = mesh.horizon();
    out["index_radius"] = mesh.index_radius();
    return out;
}

py::dict solve(const std::string& problem, const std::string& problem_file,
               std::optional<double> T, std::optional<double> tau, std::optional<double> h,
               std::optional<int> R, const std::string& scheme, const std::string& method,
               double tol, int threads) {
    const CatalogEntry entry = resolve(problem, problem_file);
    const Mesh mesh = build_mesh(override_mesh(entry.default_mesh, T, tau, h, R));

    if (scheme == "elliptic") {
        EllipticConfig cfg;
        cfg.threads = threads;
        const auto sol = solve_elliptic(entry.problem, mesh, cfg);
        py::dict out;
        out["values"] = sol.u;
        out["iterations"] = sol.iterations;
        out["final_residual"] = sol.final_residual;
        return out;
    }

    GridFunction u;
    if (scheme == "implicit") {
        SolverConfig cfg;
        cfg.method = method == "howard" ? SliceMethod::howard : SliceMethod::banach;
        cfg.tol = tol;
        cfg.threads = threads;
        u = solve_parabolic(entry.problem, mesh, cfg).values;
    } else if (scheme == "semidiscrete") {
        SemidiscreteConfig cfg;
        cfg.threads = threads;
        u = solve_semidiscrete(entry.problem, mesh, cfg);
    } else {
        throw std::invalid_argument("unknown scheme: " + scheme);
    }

    py::dict out = grid_to_dict(u);
    const RegularityReport reg = measure_regularity(u, threads);
    out["lipschitz_x"] = reg.lipschitz_x;
    out["holder_t"] = reg.holder_t;
    return out;
}

py::dict study(const std::string& problem, const std::string& problem_file,
               std::vector<double> h_list, const std::string& tau_rule,
               std::optional<double> T, const std::string& scheme, int threads) {
    const CatalogEntry entry = resolve(problem, problem_file);
    const double horizon = T ? *T : entry.default_mesh.horizon;
    auto [study_problem, exact] = entry.study_pair(horizon);
    if (h_list.empty()) h_list = entry.study_h;
    std::string rule = tau_rule;
    if (rule.empty()) rule = entry.rate_class == RateClass::smooth ? "h2" : "h";

    std::vector<MeshSpec> meshes;
    for (double h : h_list) {
        MeshSpec spec = entry.default_mesh;
        spec.horizon = horizon;
        spec.h = h;
        spec.tau = rule == "h2" ? h * h : h;
        spec.index_radius = static_cast<int>(std::lround(entry.study_box / h));
        meshes.push_back(spec);
    }
    SolverConfig cfg;
    cfg.threads = threads;
    const auto report = convergence_study(
        study_problem, exact, meshes, cfg,
        scheme == "semidiscrete" ? Scheme::semidiscrete : Scheme::implicit_fd);
    py::dict out;
    out["h"] = report.hs;
    out["tau"] = report.taus;
    out["sup_error"] = report.errors;
    out["order_pairwise"] = report.pairwise_orders;
    out["fitted_order"] = report.fitted_order;
    out["fitted_constant"] = report.fitted_constant;
    out["degenerate"] = report.degenerate;
    return out;
}

double shake_gap_py(const std::string& problem, double eps, std::optional<int> R,
                    bool shift_terminal, bool time_shifts, int threads) {
    const CatalogEntry entry = resolve(problem, "");
    const Mesh mesh = build_mesh(override_mesh(entry.default_mesh, {}, {}, {}, R));
    ShakeSpec spec = ShakeSpec::defaults(entry.problem.dim, eps);
    if (!time_shifts) spec.time_shifts.clear();
    spec.shift_terminal = shift_terminal;
    SolverConfig cfg;
    cfg.threads = threads;
    return shake_gap(entry.problem, mesh, spec, cfg);
}

}  // namespace

PYBIND11_MODULE(_bellman_fd, m) {
    m.doc() = "Monotone finite-difference solvers for Bellman equations";

    m.def("catalog_names", [] { return catalog_names(); },
          "Names of the built-in problems");
    m.def("catalog_blurb", [](const std::string& name) { return catalog(name).blurb; },
          py::arg("name"));

    m.def("solve", &solve, py::arg("problem") = std::string(),
          py::arg("problem_file") = std::string(), py::arg("T") = py::none(),
          py::arg("tau") = py::none(), py::arg("h") = py::none(), py::arg("R") = py::none(),
          py::arg("scheme") = "implicit", py::arg("method") = "banach",
          py::arg("tol") = 1e-10, py::arg("threads") = 1,
          "Solve a catalog or file problem; returns times/values/positions plus "
          "regularity statistics");

    m.def("study", &study, py::arg("problem") = std::string(),
          py::arg("problem_file") = std::string(),
          py::arg("h_list") = std::vector<double>{}, py::arg("tau_rule") = std::string(),
          py::arg("T") = py::none(), py::arg("scheme") = "implicit", py::arg("threads") = 1,
          "Convergence-rate study against the problem's oracle");

    m.def("shake_gap", &shake_gap_py, py::arg("problem"), py::arg("eps"),
          py::arg("R") = py::none(), py::arg("shift_terminal") = true,
          py::arg("time_shifts") = false, py::arg("threads") = 1,
          "Sup-norm gap between the original and shaken solutions");

    m.def("delta_h", &delta_h, py::arg("u_at_x"), py::arg("u_at_x_plus_hl"), py::arg("h"),
          "Forward difference (u(x+hl) - u(x))/h");
    m.def("Delta_h", &Delta_h, py::arg("u_minus"), py::arg("u_center"), py::arg("u_plus"),
          py::arg("h"), "Central second difference");
    m.def("delta_tau_T", &delta_tau_T, py::arg("u_now"), py::arg("u_next"), py::arg("tau"),
          "Time difference with fixed tau denominator");
}
