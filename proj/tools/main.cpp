// bellman_fd: solve, study, shake, compare and report on Bellman
// finite-difference problems. Exit codes: 0 success, 1 configuration error,
// 2 solver failure, 3 acceptance-check failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bellman/aux_solvers.hpp"
#include "bellman/catalog.hpp"
#include "bellman/diagnostics.hpp"
#include "bellman/errors.hpp"
#include "bellman/grid_io.hpp"
#include "bellman/implicit_solver.hpp"
#include "bellman/parallel.hpp"
#include "bellman/perturbation.hpp"
#include "bellman/report_io.hpp"

namespace {

using nlohmann::json;
using namespace bellman;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitCheck = 3;

struct RunConfig {
    std::string problem;       // catalog name
    std::string problem_file;  // or a JSON problem description
    std::optional<double> T, tau, h;
    std::optional<int> R;
    std::string scheme = "implicit";  // implicit | semidiscrete | elliptic
    std::string method = "banach";    // banach | howard
    double tol = 1e-10;
    long max_iter = 1'000'000;
    std::string exterior = "clamp";  // clamp | terminal | constant:<v>
    int threads = 0;                 // 0: BELLMAN_FD_THREADS or hardware
    std::string out_dir = "out";

    // study
    std::vector<double> h_list;
    std::string tau_rule;  // h | h2 | fixed:<v>; default by rate class

    // shake
    std::vector<double> eps_list = {0.2, 0.1, 0.05};
    std::string lambda_preset = "none";  // none | default
    bool shift_terminal = true;

    // compare
    double bump_f = 0.0;
    double bump_g = 0.0;

    // elliptic
    std::optional<double> lambda_override;
    std::string elliptic_mode = "both";  // vi | lh | both
    double elliptic_tol = 1e-6;
};

json to_json(const RunConfig& c) {
    json j;
    j["problem"] = c.problem;
    j["problem_file"] = c.problem_file;
    json mesh;
    if (c.T) mesh["T"] = *c.T;
    if (c.tau) mesh["tau"] = *c.tau;
    if (c.h) mesh["h"] = *c.h;
    if (c.R) mesh["R"] = *c.R;
    j["mesh"] = mesh;
    j["solver"] = {{"scheme", c.scheme},   {"method", c.method},     {"tol", c.tol},
                   {"max_iter", c.max_iter}, {"exterior", c.exterior}, {"threads", c.threads}};
    j["output"] = {{"dir", c.out_dir}};
    j["study"] = {{"h_list", c.h_list}, {"tau_rule", c.tau_rule}};
    j["shake"] = {{"eps_list", c.eps_list},
                  {"lambda_preset", c.lambda_preset},
                  {"shift_terminal", c.shift_terminal}};
    j["compare"] = {{"bump_f", c.bump_f}, {"bump_g", c.bump_g}};
    json ell = {{"mode", c.elliptic_mode}, {"tol", c.elliptic_tol}};
    if (c.lambda_override) ell["lambda"] = *c.lambda_override;
    j["elliptic"] = ell;
    return j;
}

// Loads config-file values into the defaults; it runs before flag parsing,
// so command-line flags override whatever the file set.
void load_config_file(const std::string& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw std::invalid_argument(std::string("config file: ") + ex.what());
    }
    c.problem = j.value("problem", c.problem);
    c.problem_file = j.value("problem_file", c.problem_file);
    if (j.contains("mesh")) {
        const auto& m = j.at("mesh");
        if (m.contains("T")) c.T = m.at("T").get<double>();
        if (m.contains("tau")) c.tau = m.at("tau").get<double>();
        if (m.contains("h")) c.h = m.at("h").get<double>();
        if (m.contains("R")) c.R = m.at("R").get<int>();
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        c.scheme = s.value("scheme", c.scheme);
        c.method = s.value("method", c.method);
        c.tol = s.value("tol", c.tol);
        c.max_iter = s.value("max_iter", c.max_iter);
        c.exterior = s.value("exterior", c.exterior);
        c.threads = s.value("threads", c.threads);
    }
    if (j.contains("output")) c.out_dir = j.at("output").value("dir", c.out_dir);
    if (j.contains("study")) {
        const auto& s = j.at("study");
        if (s.contains("h_list")) c.h_list = s.at("h_list").get<std::vector<double>>();
        c.tau_rule = s.value("tau_rule", c.tau_rule);
    }
    if (j.contains("shake")) {
        const auto& s = j.at("shake");
        if (s.contains("eps_list")) c.eps_list = s.at("eps_list").get<std::vector<double>>();
        c.lambda_preset = s.value("lambda_preset", c.lambda_preset);
        c.shift_terminal = s.value("shift_terminal", c.shift_terminal);
    }
    if (j.contains("compare")) {
        c.bump_f = j.at("compare").value("bump_f", c.bump_f);
        c.bump_g = j.at("compare").value("bump_g", c.bump_g);
    }
    if (j.contains("elliptic")) {
        const auto& e = j.at("elliptic");
        c.elliptic_mode = e.value("mode", c.elliptic_mode);
        c.elliptic_tol = e.value("tol", c.elliptic_tol);
        if (e.contains("lambda")) c.lambda_override = e.at("lambda").get<double>();
    }
}

CatalogEntry resolve_problem(const RunConfig& c) {
    if (!c.problem.empty() && !c.problem_file.empty())
        throw std::invalid_argument("give exactly one of --problem / --problem-file");
    if (!c.problem_file.empty()) return load_problem_file(c.problem_file);
    if (!c.problem.empty()) return catalog(c.problem);
    throw std::invalid_argument("no problem selected; use --problem or --problem-file");
}

MeshSpec resolve_mesh(const RunConfig& c, const CatalogEntry& entry) {
    MeshSpec spec = entry.default_mesh;
    if (c.T) spec.horizon = *c.T;
    if (c.tau) spec.tau = *c.tau;
    if (c.h) spec.h = *c.h;
    if (c.R) spec.index_radius = *c.R;
    return spec;
}

ExteriorPolicy resolve_exterior(const RunConfig& c, const ControlProblem& problem) {
    if (c.exterior == "clamp") return ExteriorPolicy::clamp();
    if (c.exterior == "terminal") return ExteriorPolicy::extend_terminal(problem.terminal);
    if (c.exterior.rfind("constant:", 0) == 0)
        return ExteriorPolicy::constant(std::stod(c.exterior.substr(9)));
    throw std::invalid_argument("unknown exterior policy: " + c.exterior);
}

SolverConfig resolve_solver(const RunConfig& c, const ControlProblem& problem) {
    SolverConfig cfg;
    if (c.method == "banach") cfg.method = SliceMethod::banach;
    else if (c.method == "howard") cfg.method = SliceMethod::howard;
    else throw std::invalid_argument("unknown method: " + c.method);
    cfg.tol = c.tol;
    cfg.max_iterations = c.max_iter;
    cfg.exterior = resolve_exterior(c, problem);
    cfg.threads = c.threads == 0 ? default_thread_count() : c.threads;
    return cfg;
}

void ensure_out_dir(const RunConfig& c) {
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    if (ec) throw std::invalid_argument("cannot create output directory " + c.out_dir);
}

void write_spatial_csv(const std::string& path, const Mesh& mesh,
                       std::span<const double> field) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "i1";
    for (int m = 1; m < mesh.num_directions(); ++m) out << ",i" << (m + 1);
    for (int m = 0; m < mesh.dim(); ++m) out << ",x" << (m + 1);
    out << ",value\n";
    std::vector<int> multi(mesh.num_directions());
    std::vector<double> x(mesh.dim());
    for (std::int64_t node = 0; node < mesh.num_nodes(); ++node) {
        mesh.decode(node, multi);
        mesh.position(node, x);
        for (std::size_t k = 0; k < multi.size(); ++k) out << (k ? "," : "") << multi[k];
        for (double v : x) out << ',' << format_double(v);
        out << ',' << format_double(field[node]) << '\n';
    }
}

int cmd_catalog() {
    for (const auto& name : catalog_names()) {
        const CatalogEntry e = catalog(name);
        std::printf("%-22s %s%s\n", name.c_str(), e.blurb.c_str(),
                    e.has_exact() ? " [exact solution]" : "");
        std::printf("%-22s defaults: T=%g tau=%g h=%g R=%d\n", "", e.default_mesh.horizon,
                    e.default_mesh.tau, e.default_mesh.h, e.default_mesh.index_radius);
    }
    return kExitOk;
}

int cmd_solve(const RunConfig& c) {
    const CatalogEntry entry = resolve_problem(c);
    const MeshSpec spec = resolve_mesh(c, entry);
    const Mesh mesh = build_mesh(spec);
    const ValidationReport vr = validate(entry.problem, mesh);
    if (!vr.pass) {
        std::cerr << "validation failed:\n";
        for (const auto& v : vr.violations) std::cerr << "  " << v << "\n";
        return kExitConfig;
    }
    if (vr.bound_exceeded)
        std::fprintf(stderr,
                     "warning: sampled coefficient statistics exceed the declared K=%g "
                     "(|psi| up to %g, space quotient up to %g)\n",
                     entry.problem.bound, vr.max_abs_value, vr.max_space_quotient);
    ensure_out_dir(c);

    GridFunction u;
    json stats;
    if (c.scheme == "implicit") {
        const SolverConfig cfg = resolve_solver(c, entry.problem);
        const auto sol = solve_parabolic(entry.problem, mesh, cfg);
        u = sol.values;
        stats = {{"total_slice_iterations", sol.total_iterations()},
                 {"epsilon", sol.params.epsilon},
                 {"contraction_factor", sol.params.contraction_factor}};
    } else if (c.scheme == "semidiscrete") {
        SemidiscreteConfig cfg;
        cfg.exterior = resolve_exterior(c, entry.problem);
        cfg.threads = c.threads == 0 ? default_thread_count() : c.threads;
        u = solve_semidiscrete(entry.problem, mesh, cfg);
        stats = {{"scheme", "semidiscrete"}};
    } else if (c.scheme == "elliptic") {
        EllipticConfig cfg;
        cfg.tol = c.elliptic_tol;
        cfg.exterior = resolve_exterior(c, entry.problem);
        cfg.threads = c.threads == 0 ? default_thread_count() : c.threads;
        ControlProblem p = entry.problem;
        if (c.lambda_override) p.lambda = *c.lambda_override;
        const auto sol = solve_elliptic(p, mesh, cfg);
        write_spatial_csv(c.out_dir + "/elliptic_solution.csv", mesh, sol.u);
        json report = {{"iterations", sol.iterations},
                       {"final_residual", sol.final_residual},
                       {"config", to_json(c)}};
        write_json_file(c.out_dir + "/elliptic.json", report);
        std::printf("elliptic solve: %ld iterations, residual %g\n", sol.iterations,
                    sol.final_residual);
        return kExitOk;
    } else {
        throw std::invalid_argument("unknown scheme: " + c.scheme);
    }

    write_grid_csv(c.out_dir + "/solution.csv", u);
    const RegularityReport reg = measure_regularity(u, c.threads);
    json report = to_json(reg);
    report["stats"] = stats;
    report["validation"] = to_json(vr);
    report["config"] = to_json(c);
    write_json_file(c.out_dir + "/regularity.json", report);
    write_text_file(c.out_dir + "/regularity.txt", to_text(reg));
    std::printf("solved %s on %d levels x %lld nodes; lipschitz_x=%g holder_t=%g\n",
                entry.problem.name.c_str(), mesh.num_levels(),
                static_cast<long long>(mesh.num_nodes()), reg.lipschitz_x, reg.holder_t);
    return kExitOk;
}

int cmd_study(const RunConfig& c) {
    const CatalogEntry entry = resolve_problem(c);
    if (entry.rate_class == RateClass::none)
        throw std::invalid_argument("problem has no declared rate class / oracle for a study");
    const double T = c.T ? *c.T : entry.default_mesh.horizon;
    const auto [problem, exact] = entry.study_pair(T);

    std::vector<double> hs = c.h_list.empty() ? entry.study_h : c.h_list;
    if (hs.size() < 3) {
        std::cerr << "study needs at least 3 meshes (got " << hs.size() << ")\n";
        return kExitConfig;
    }
    std::string rule = c.tau_rule;
    if (rule.empty()) rule = entry.rate_class == RateClass::smooth ? "h2" : "h";

    std::vector<MeshSpec> meshes;
    for (double h : hs) {
        MeshSpec spec = entry.default_mesh;
        spec.horizon = T;
        spec.h = h;
        spec.index_radius = static_cast<int>(std::lround(entry.study_box / h));
        if (rule == "h") spec.tau = h;
        else if (rule == "h2") spec.tau = h * h;
        else if (rule.rfind("fixed:", 0) == 0) spec.tau = std::stod(rule.substr(6));
        else throw std::invalid_argument("unknown tau rule: " + rule);
        meshes.push_back(spec);
    }

    const SolverConfig cfg = resolve_solver(c, problem);
    const Scheme scheme =
        c.scheme == "semidiscrete" ? Scheme::semidiscrete : Scheme::implicit_fd;
    const auto report = convergence_study(problem, exact, meshes, cfg, scheme);

    ensure_out_dir(c);
    json j = to_json(report);
    j["config"] = to_json(c);
    write_json_file(c.out_dir + "/convergence.json", j);
    write_text_file(c.out_dir + "/convergence.csv", convergence_csv(report));
    write_text_file(c.out_dir + "/convergence.txt", to_text(report));
    std::fputs(to_text(report).c_str(), stdout);

    const double floor = entry.rate_class == RateClass::smooth ? 1.9 : 0.5;
    if (report.degenerate) {
        std::printf("errors at solver noise; no order to check\n");
        return kExitOk;
    }
    if (report.fitted_order < floor) {
        std::printf("fitted order %g misses the declared floor %g\n", report.fitted_order,
                    floor);
        return kExitCheck;
    }
    return kExitOk;
}

int cmd_shake(const RunConfig& c) {
    const CatalogEntry entry = resolve_problem(c);
    const MeshSpec spec = resolve_mesh(c, entry);
    const Mesh mesh = build_mesh(spec);
    const SolverConfig cfg = resolve_solver(c, entry.problem);

    std::vector<double> gaps, ratios;
    for (double eps : c.eps_list) {
        ShakeSpec shake_spec = ShakeSpec::defaults(entry.problem.dim, eps);
        if (c.lambda_preset == "none") shake_spec.time_shifts.clear();
        shake_spec.shift_terminal = c.shift_terminal;
        const double gap = shake_gap(entry.problem, mesh, shake_spec, cfg);
        gaps.push_back(gap);
        ratios.push_back(gap / eps);
        std::printf("eps=%-8g gap=%-12g gap/eps=%g\n", eps, gap, gap / eps);
    }
    ensure_out_dir(c);
    json j = {{"eps", c.eps_list}, {"gap", gaps}, {"gap_over_eps", ratios},
              {"config", to_json(c)}};
    write_json_file(c.out_dir + "/shake.json", j);

    const double lo = *std::min_element(ratios.begin(), ratios.end());
    const double hi = *std::max_element(ratios.begin(), ratios.end());
    if (!(hi / std::max(lo, 1e-300) < 2.0)) {
        std::printf("gap(eps)/eps varies by %.2fx (>= 2x): not linear in eps\n", hi / lo);
        return kExitCheck;
    }
    return kExitOk;
}

int cmd_compare(const RunConfig& c) {
    const CatalogEntry entry = resolve_problem(c);
    const MeshSpec spec = resolve_mesh(c, entry);
    const Mesh mesh = build_mesh(spec);
    if (c.bump_f < 0.0 || c.bump_g < 0.0)
        throw std::invalid_argument("--bump-f/--bump-g must be nonnegative");

    ControlProblem bumped = entry.problem;
    for (auto& ctrl : bumped.controls) {
        auto f = ctrl.source;
        const double df = c.bump_f;
        ctrl.source = [f, df](double t, std::span<const double> x) { return f(t, x) + df; };
    }
    {
        auto g = bumped.terminal;
        const double dg = c.bump_g;
        bumped.terminal = [g, dg](std::span<const double> x) { return g(x) + dg; };
    }

    const SolverConfig cfg = resolve_solver(c, entry.problem);
    const ComparisonReport report = check_comparison(entry.problem, bumped, mesh, cfg);
    ensure_out_dir(c);
    json j = to_json(report);
    j["config"] = to_json(c);
    write_json_file(c.out_dir + "/compare.json", j);
    std::printf("comparison: applicable=%d violation=%g pass=%d\n", int(report.applicable),
                report.max_violation, int(report.pass));
    if (!report.applicable) return kExitConfig;
    return report.pass ? kExitOk : kExitCheck;
}

int cmd_elliptic(const RunConfig& c) {
    const CatalogEntry entry = resolve_problem(c);
    const MeshSpec spec = resolve_mesh(c, entry);
    const Mesh mesh = build_mesh(spec);
    ControlProblem p = entry.problem;
    if (c.lambda_override) p.lambda = *c.lambda_override;

    EllipticConfig cfg;
    cfg.tol = c.elliptic_tol;
    cfg.exterior = resolve_exterior(c, p);
    cfg.threads = c.threads == 0 ? default_thread_count() : c.threads;

    ensure_out_dir(c);
    json j;
    j["config"] = to_json(c);
    int code = kExitOk;
    if (c.elliptic_mode == "vi" || c.elliptic_mode == "both") {
        cfg.mode = EllipticMode::value_iteration;
        const auto vi = solve_elliptic(p, mesh, cfg);
        write_spatial_csv(c.out_dir + "/elliptic_vi.csv", mesh, vi.u);
        j["value_iteration"] = {{"iterations", vi.iterations},
                                {"final_residual", vi.final_residual}};
        if (c.elliptic_mode == "both") {
            cfg.mode = EllipticMode::long_horizon;
            const auto lh = solve_elliptic(p, mesh, cfg);
            j["long_horizon"] = {{"horizon_converged", lh.horizon_converged},
                                 {"final_gap", lh.final_residual}};
            if (!lh.horizon_converged)
                std::printf("note: long-horizon mode did not go Cauchy below tol before "
                            "horizon_max (lambda may be too small)\n");
            double gap = 0.0;
            for (std::size_t i = 0; i < vi.u.size(); ++i)
                gap = std::max(gap, std::abs(vi.u[i] - lh.u[i]));
            j["mode_gap"] = gap;
            std::printf("value_iteration vs long_horizon sup gap: %g (budget %g)\n", gap,
                        10.0 * cfg.tol);
            if (!(gap <= 10.0 * cfg.tol)) code = kExitCheck;
        }
    } else if (c.elliptic_mode == "lh") {
        cfg.mode = EllipticMode::long_horizon;
        const auto lh = solve_elliptic(p, mesh, cfg);
        write_spatial_csv(c.out_dir + "/elliptic_lh.csv", mesh, lh.u);
        j["long_horizon"] = {{"horizon_converged", lh.horizon_converged},
                             {"final_gap", lh.final_residual}};
    } else {
        throw std::invalid_argument("unknown elliptic mode: " + c.elliptic_mode);
    }
    write_json_file(c.out_dir + "/elliptic.json", j);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig config;
    std::string config_file;

    // The config file seeds the defaults, so it must load before CLI11
    // assigns flag values; scan for --config ahead of the real parse.
    for (int i = 1; i < argc; ++i) {
        const std::string_view arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config_file = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) config_file = std::string(arg.substr(9));
    }
    if (!config_file.empty()) {
        try {
            load_config_file(config_file, config);
        } catch (const std::invalid_argument& ex) {
            std::cerr << "configuration error: " << ex.what() << "\n";
            return kExitConfig;
        }
    }

    CLI::App app{"Monotone finite-difference solver for Bellman equations"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");
    app.add_option("--config", config_file, "JSON config file (flags take precedence)");

    auto add_common = [&](CLI::App* cmd) {
        cmd->set_help_flag("--help", "print help");
        cmd->add_option("--problem", config.problem, "catalog problem name");
        cmd->add_option("--problem-file", config.problem_file, "JSON problem description");
        cmd->add_option("--T", config.T, "horizon");
        cmd->add_option("--tau", config.tau, "time step");
        cmd->add_option("--h", config.h, "space step");
        cmd->add_option("--R", config.R, "index radius");
        cmd->add_option("--method", config.method, "slice method: banach|howard");
        cmd->add_option("--tol", config.tol, "slice fixed-point tolerance");
        cmd->add_option("--max-iter", config.max_iter, "iteration cap per slice");
        cmd->add_option("--exterior", config.exterior,
                        "exterior policy: clamp|terminal|constant:<v>");
        cmd->add_option("--threads", config.threads,
                        "worker threads (0: BELLMAN_FD_THREADS or hardware)");
        cmd->add_option("--out", config.out_dir, "output directory");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve one problem and report regularity");
    add_common(solve);
    solve->add_option("--scheme", config.scheme, "implicit|semidiscrete|elliptic");
    solve->add_option("--lambda", config.lambda_override, "override declared lambda");
    solve->add_option("--elliptic-tol", config.elliptic_tol, "elliptic tolerance");

    CLI::App* study = app.add_subcommand("study", "convergence-rate study against the oracle");
    add_common(study);
    study->add_option("--scheme", config.scheme, "implicit|semidiscrete");
    study->add_option("--h-list", config.h_list, "mesh family space steps")->delimiter(',');
    study->add_option("--tau-rule", config.tau_rule, "h|h2|fixed:<v>");

    CLI::App* shake_cmd = app.add_subcommand("shake", "coefficient-shaking stability check");
    add_common(shake_cmd);
    shake_cmd->add_option("--eps-list", config.eps_list, "shake magnitudes")->delimiter(',');
    shake_cmd->add_option("--lambda-preset", config.lambda_preset,
                          "time-shift preset: none|default");
    shake_cmd->add_flag("--shift-terminal,!--no-shift-terminal", config.shift_terminal,
                        "shift the terminal condition too");

    CLI::App* compare = app.add_subcommand("compare", "comparison-principle check");
    add_common(compare);
    compare->add_option("--bump-f", config.bump_f, "nonnegative source bump");
    compare->add_option("--bump-g", config.bump_g, "nonnegative terminal bump");

    CLI::App* elliptic = app.add_subcommand("elliptic", "stationary solve, both modes");
    add_common(elliptic);
    elliptic->add_option("--lambda", config.lambda_override, "override declared lambda");
    elliptic->add_option("--mode", config.elliptic_mode, "vi|lh|both");
    elliptic->add_option("--elliptic-tol", config.elliptic_tol, "elliptic tolerance");

    CLI::App* cat = app.add_subcommand("catalog", "list built-in problems");
    cat->set_help_flag("--help", "print help");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (cat->parsed()) return cmd_catalog();
        if (solve->parsed()) return cmd_solve(config);
        if (study->parsed()) return cmd_study(config);
        if (shake_cmd->parsed()) return cmd_shake(config);
        if (compare->parsed()) return cmd_compare(config);
        if (elliptic->parsed()) return cmd_elliptic(config);
        std::cerr << "no subcommand\n";
        return kExitConfig;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "configuration error: " << ex.what() << "\n";
        return kExitConfig;
    } catch (const EvaluationError& ex) {
        std::cerr << "evaluation error: " << ex.what() << "\n";
        return kExitSolver;
    } catch (const ConvergenceError& ex) {
        std::cerr << "solver failure: " << ex.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitSolver;
    }
}
