#include "bellman/catalog.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bellman/expr.hpp"

namespace bellman {

namespace {

SpaceTimeFn constant(double v) {
    return [v](double, std::span<const double>) { return v; };
}

std::vector<SpaceTimeFn> constants(int n, double v) {
    return std::vector<SpaceTimeFn>(static_cast<std::size_t>(n), constant(v));
}

ControlCoefficients make_control(int d1, double sigma, double c, SpaceTimeFn f,
                                 std::string label) {
    ControlCoefficients ctrl;
    ctrl.sigma = constants(d1, sigma);
    ctrl.drift = constants(2 * d1, 0.0);
    ctrl.discount = constant(c);
    ctrl.source = std::move(f);
    ctrl.label = std::move(label);
    return ctrl;
}

MeshSpec mesh_1d(double T, double tau, double h, int R) {
    MeshSpec spec;
    spec.horizon = T;
    spec.tau = tau;
    spec.h = h;
    spec.index_radius = R;
    spec.directions = {{1.0}};
    spec.origin = {0.0};
    return spec;
}

CatalogEntry make_const() {
    CatalogEntry e;
    e.problem.name = "const";
    e.problem.dim = 1;
    e.problem.num_directions = 1;
    e.problem.controls = {make_control(1, 0.0, 1.0, constant(1.0), "only")};
    e.problem.terminal = [](std::span<const double>) { return 1.0; };
    e.problem.bound = 1.0;
    e.problem.lambda = 1.0;
    e.exact_for = [](double) {
        return ExactSolution{[](double, std::span<const double>) { return 1.0; },
                             "v = 1 (0 = -1*1 + 1 at every point)"};
    };
    e.default_mesh = mesh_1d(1.0, 0.25, 0.5, 4);
    e.blurb = "single control, a=b=0, c=1, f=1; exact solution v = 1";
    return e;
}

// Manufactured rate-study problem: v(t,x) = e^{t-T} cos(x) e^{-x^2/2} and
// f chosen so v solves v_t + (1/2) v_xx + f = 0. The Gaussian damping makes
// the box truncation error negligible against the h^2 discretization error.
StudyVariant make_heat1d_study_variant() {
    StudyVariant variant;
    variant.make = [](double T) {
        auto w = [](double x) { return std::cos(x) * std::exp(-0.5 * x * x); };
        ControlProblem p;
        p.name = "heat1d_manufactured";
        p.dim = 1;
        p.num_directions = 1;
        ControlCoefficients ctrl = make_control(1, 1.0, 0.0, nullptr, "only");
        // -(v_t + (1/2) v_xx) with v = e^{t-T} w; w + w''/2 reduces to
        // e^{-x^2/2} (x sin x + (x^2/2) cos x).
        ctrl.source = [T](double t, std::span<const double> xs) {
            const double x = xs[0];
            return -std::exp(t - T) * std::exp(-0.5 * x * x) *
                   (x * std::sin(x) + 0.5 * x * x * std::cos(x));
        };
        p.controls = {ctrl};
        p.terminal = [w](std::span<const double> xs) { return w(xs[0]); };
        p.bound = 2.0;
        p.lambda = 0.0;
        ExactSolution exact{
            [w, T](double t, std::span<const double> xs) {
                return std::exp(t - T) * w(xs[0]);
            },
            "manufactured: e^{t-T} cos(x) e^{-x^2/2} with matching analytic source"};
        return std::make_pair(p, exact);
    };
    return variant;
}

CatalogEntry make_heat1d() {
    CatalogEntry e;
    e.problem.name = "heat1d";
    e.problem.dim = 1;
    e.problem.num_directions = 1;
    e.problem.controls = {make_control(1, 1.0, 0.0, constant(0.0), "only")};
    e.problem.terminal = [](std::span<const double> x) { return std::cos(x[0]); };
    e.problem.bound = 1.0;
    e.problem.lambda = 0.0;
    e.exact_for = [](double T) {
        return ExactSolution{
            [T](double t, std::span<const double> x) {
                return std::exp(-0.5 * (T - t)) * std::cos(x[0]);
            },
            "heat kernel solution of u_t + (1/2) u_xx = 0, u(T,x) = cos x"};
    };
    e.default_mesh = mesh_1d(1.0, 0.01, 0.1, 60);
    e.rate_class = RateClass::smooth;
    e.blurb = "single control, sigma=1 (a=1/2); exact e^{-(T-t)/2} cos x";
    e.study = make_heat1d_study_variant();
    return e;
}

CatalogEntry make_transport_kink() {
    CatalogEntry e;
    e.problem.name = "transport_kink";
    e.problem.dim = 1;
    e.problem.num_directions = 1;
    ControlCoefficients right = make_control(1, 0.0, 0.0, constant(0.0), "drift+");
    right.drift[signed_slot(1)] = constant(1.0);
    ControlCoefficients left = make_control(1, 0.0, 0.0, constant(0.0), "drift-");
    left.drift[signed_slot(-1)] = constant(1.0);
    e.problem.controls = {right, left};
    e.problem.terminal = [](std::span<const double> x) { return -std::abs(x[0]); };
    e.problem.bound = 1.0;
    e.problem.lambda = 0.0;
    e.exact_for = [](double T) {
        return ExactSolution{
            [T](double t, std::span<const double> x) {
                return -std::max(std::abs(x[0]) - (T - t), 0.0);
            },
            "Hopf-Lax solution of u_t + |u_x| = 0 with g = -|x|"};
    };
    e.default_mesh = mesh_1d(1.0, 0.1, 0.1, 80);
    e.rate_class = RateClass::lipschitz;
    e.blurb = "two drift controls realize u_t + |u_x| = 0; kinked terminal -|x|";
    return e;
}

CatalogEntry make_eikonal2ctl() {
    CatalogEntry e;
    e.problem.name = "eikonal2ctl";
    e.problem.dim = 2;
    e.problem.num_directions = 2;
    for (int axis = 1; axis <= 2; ++axis) {
        for (int sign : {+1, -1}) {
            ControlCoefficients c = make_control(2, 0.0, 0.0, constant(0.0),
                                                 (sign > 0 ? "+e" : "-e") + std::to_string(axis));
            c.drift[signed_slot(sign * axis)] = constant(1.0);
            e.problem.controls.push_back(std::move(c));
        }
    }
    e.problem.terminal = [](std::span<const double> x) {
        return -(std::abs(x[0]) + std::abs(x[1]));
    };
    e.problem.bound = 1.5;
    e.problem.lambda = 0.0;
    e.exact_for = [](double T) {
        return ExactSolution{
            [T](double t, std::span<const double> x) {
                const double l1 = std::abs(x[0]) + std::abs(x[1]);
                return -std::max(l1 - (T - t), 0.0);
            },
            "Hopf-Lax solution of u_t + max(|u_x1|,|u_x2|) = 0 with g = -|x|_1"};
    };
    MeshSpec spec;
    spec.horizon = 0.5;
    spec.tau = 0.1;
    spec.h = 0.1;
    spec.index_radius = 20;
    spec.directions = {{1.0, 0.0}, {0.0, 1.0}};
    spec.origin = {0.0, 0.0};
    e.default_mesh = spec;
    e.rate_class = RateClass::lipschitz;
    e.blurb = "2-d eikonal, four axis drift controls; kinked terminal -|x|_1";
    e.study_h = {0.1, 0.05, 0.025};  // h = 0.2 with T = 0.5 is pre-asymptotic
    e.study_box = 3.0;
    return e;
}

CatalogEntry make_twocontrol_diffusion() {
    CatalogEntry e;
    e.problem.name = "twocontrol_diffusion";
    e.problem.dim = 1;
    e.problem.num_directions = 1;
    SpaceTimeFn bump = [](double, std::span<const double> x) {
        return std::max(1.0 - x[0] * x[0], 0.0);
    };
    e.problem.controls = {make_control(1, 1.0, 1.0, bump, "diffuse"),
                          make_control(1, 0.0, 1.0, constant(0.0), "freeze")};
    e.problem.terminal = [](std::span<const double> x) {
        return std::max(1.0 - x[0] * x[0], 0.0);
    };
    e.problem.bound = 2.0;
    e.problem.lambda = 1.0;
    e.default_mesh = mesh_1d(1.0, 0.05, 0.1, 60);
    e.blurb = "sigma switches between 0 and 1 (degenerate branch); compact f, g";
    return e;
}

}  // namespace

CatalogEntry make_obstacle_entry(double M) {
    CatalogEntry e;
    SpaceFn g_obs = [](std::span<const double> x) {
        return 0.5 * std::max(1.0 - x[0] * x[0], 0.0);
    };
    e.problem.name = "obstacle1d";
    e.problem.dim = 1;
    e.problem.num_directions = 1;
    SpaceTimeFn penalty_source = [g_obs, M](double, std::span<const double> x) {
        return M * g_obs(x);
    };
    // Continue branch (1/2)Delta u - u; stopping branch adds the one-sided
    // penalty M (g_obs - u) on top of it, so the sup realizes
    // L1 u + M (g_obs - u)_+ .
    e.problem.controls = {make_control(1, 1.0, 1.0, constant(0.0), "continue"),
                          make_control(1, 1.0, 1.0 + M, penalty_source, "stop")};
    e.problem.terminal = g_obs;
    e.problem.bound = M;
    e.problem.lambda = 1.0;
    e.default_mesh = mesh_1d(1.0, 0.05, 0.1, 30);
    e.obstacle = ObstacleInfo{g_obs, 0.5, 1.0, M};
    e.blurb = "optimal stopping via penalty weight M; complementarity checked directly";
    return e;
}

std::pair<ControlProblem, ExactSolution> make_elliptic_manufactured() {
    ControlProblem p;
    p.name = "elliptic_cos";
    p.dim = 1;
    p.num_directions = 1;
    SpaceTimeFn f = [](double, std::span<const double> x) { return 1.5 * std::cos(x[0]); };
    p.controls = {make_control(1, 1.0, 1.0, f, "only")};
    p.terminal = [](std::span<const double>) { return 0.0; };
    p.bound = 1.5;
    p.lambda = 1.0;
    ExactSolution exact{[](double, std::span<const double> x) { return std::cos(x[0]); },
                        "stationary solution of (1/2) u'' - u + (3/2) cos x = 0"};
    return {p, exact};
}

const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names = {"const",       "heat1d",
                                                   "transport_kink", "eikonal2ctl",
                                                   "obstacle1d",  "twocontrol_diffusion"};
    return names;
}

CatalogEntry catalog(const std::string& name) {
    if (name == "const") return make_const();
    if (name == "heat1d") return make_heat1d();
    if (name == "transport_kink") return make_transport_kink();
    if (name == "eikonal2ctl") return make_eikonal2ctl();
    if (name == "obstacle1d") return make_obstacle_entry(1e3);
    if (name == "twocontrol_diffusion") return make_twocontrol_diffusion();
    std::ostringstream os;
    os << "unknown problem '" << name << "'; catalog:";
    for (const auto& n : catalog_names()) os << " " << n;
    throw std::invalid_argument(os.str());
}

namespace {

SpaceTimeFn expr_fn(const std::string& src, int dim) {
    Expr e = Expr::parse(src, dim);
    return [e](double t, std::span<const double> x) { return e.eval(t, x); };
}

}  // namespace

CatalogEntry load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open problem file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw std::invalid_argument("problem file " + path + ": " + ex.what());
    }

    CatalogEntry e;
    try {
        e.problem.name = j.value("name", std::string("custom"));
        const int dim = j.at("dim").get<int>();
        if (dim < 1 || dim > 16) throw std::invalid_argument("dim must be in 1..16");
        e.problem.dim = dim;

        std::vector<std::vector<double>> directions;
        if (j.contains("directions")) {
            directions = j.at("directions").get<std::vector<std::vector<double>>>();
        } else {
            for (int m = 0; m < dim; ++m) {
                std::vector<double> axis(dim, 0.0);
                axis[m] = 1.0;
                directions.push_back(axis);
            }
        }
        const int d1 = static_cast<int>(directions.size());
        e.problem.num_directions = d1;

        e.problem.bound = j.value("K", 1.0);
        e.problem.lambda = j.value("lambda", 0.0);

        const Expr terminal = Expr::parse(j.at("terminal").get<std::string>(), dim);
        e.problem.terminal = [terminal](std::span<const double> x) {
            return terminal.eval(0.0, x);
        };

        for (const auto& jc : j.at("controls")) {
            ControlCoefficients ctrl;
            const auto sigma = jc.at("sigma").get<std::vector<std::string>>();
            if (static_cast<int>(sigma.size()) != d1)
                throw std::invalid_argument("sigma must list one expression per direction");
            for (const auto& s : sigma) ctrl.sigma.push_back(expr_fn(s, dim));
            const auto b_plus = jc.value("b_plus", std::vector<std::string>(d1, "0"));
            const auto b_minus = jc.value("b_minus", std::vector<std::string>(d1, "0"));
            if (static_cast<int>(b_plus.size()) != d1 || static_cast<int>(b_minus.size()) != d1)
                throw std::invalid_argument("b_plus/b_minus must list one expression per direction");
            ctrl.drift.resize(2 * d1);
            for (int k = 1; k <= d1; ++k) {
                ctrl.drift[signed_slot(k)] = expr_fn(b_plus[k - 1], dim);
                ctrl.drift[signed_slot(-k)] = expr_fn(b_minus[k - 1], dim);
            }
            ctrl.discount = expr_fn(jc.value("c", std::string("0")), dim);
            ctrl.source = expr_fn(jc.value("f", std::string("0")), dim);
            ctrl.label = jc.value("label", std::string());
            e.problem.controls.push_back(std::move(ctrl));
        }
        if (e.problem.controls.empty())
            throw std::invalid_argument("problem file declares no controls");

        if (j.contains("exact")) {
            const Expr exact = Expr::parse(j.at("exact").get<std::string>(), dim);
            std::string desc = "user expression: " + j.at("exact").get<std::string>();
            e.exact_for = [exact, desc](double) {
                return ExactSolution{
                    [exact](double t, std::span<const double> x) { return exact.eval(t, x); },
                    desc};
            };
        }

        MeshSpec spec;
        spec.directions = directions;
        spec.origin = std::vector<double>(dim, 0.0);
        if (j.contains("mesh")) {
            const auto& jm = j.at("mesh");
            spec.horizon = jm.value("T", 1.0);
            spec.tau = jm.value("tau", 0.1);
            spec.h = jm.value("h", 0.1);
            spec.index_radius = jm.value("R", 20);
            if (jm.contains("origin")) spec.origin = jm.at("origin").get<std::vector<double>>();
        }
        e.default_mesh = spec;
        const std::string rc = j.value("rate_class", std::string("none"));
        e.rate_class = rc == "smooth"      ? RateClass::smooth
                       : rc == "lipschitz" ? RateClass::lipschitz
                                           : RateClass::none;
        e.blurb = j.value("description", std::string("user problem"));
    } catch (const nlohmann::json::exception& ex) {
        throw std::invalid_argument("problem file " + path + ": " + ex.what());
    }
    return e;
}

}  // namespace bellman
