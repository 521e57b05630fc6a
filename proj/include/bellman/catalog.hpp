#pragma once

#include <functional>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include "bellman/problem.hpp"

namespace bellman {

/// Convergence-rate class a problem is expected to meet in studies.
enum class RateClass { none, smooth, lipschitz };

/// Extra data for obstacle-type entries: the obstacle itself and the
/// continue-control operator used by the complementarity residuals.
struct ObstacleInfo {
    SpaceFn obstacle;    // g_obs
    double a_continue;   // diffusion coefficient of the continue control
    double c_continue;   // discount of the continue control
    double penalty;      // M
};

/// Rate studies need data that decays inside the truncated box, so entries
/// may carry a manufactured variant (decaying v_exact, analytic f) used by
/// convergence studies in place of the display problem. Both the problem
/// and its exact solution depend on the horizon.
struct StudyVariant {
    std::function<std::pair<ControlProblem, ExactSolution>(double horizon)> make;
};

struct CatalogEntry {
    ControlProblem problem;
    /// Exact solutions depend on the horizon; materialize one per run.
    std::function<ExactSolution(double horizon)> exact_for;
    MeshSpec default_mesh;
    RateClass rate_class = RateClass::none;
    /// tau = h^2 for smooth-class studies, tau = h for Lipschitz-class.
    std::string blurb;
    std::optional<ObstacleInfo> obstacle;
    std::optional<StudyVariant> study;
    /// Default h family and physical box half-width for rate studies.
    std::vector<double> study_h = {0.2, 0.1, 0.05, 0.025};
    double study_box = 6.0;

    bool has_exact() const { return static_cast<bool>(exact_for); }

    /// Problem/oracle pair a rate study at horizon T should use.
    std::pair<ControlProblem, ExactSolution> study_pair(double horizon) const {
        if (study) return study->make(horizon);
        return {problem, exact_for(horizon)};
    }
};

/// Built-in verification problems:
///   const, heat1d, transport_kink, eikonal2ctl, obstacle1d,
///   twocontrol_diffusion.
/// Unknown names throw std::invalid_argument listing the catalog.
CatalogEntry catalog(const std::string& name);

const std::vector<std::string>& catalog_names();

/// Obstacle problem with penalty weight M (catalog uses M = 1e3);
/// exposed so harnesses can double M and watch the residuals.
CatalogEntry make_obstacle_entry(double M);

/// Stationary manufactured problem: single control a=1/2, c=1 with
/// f = (3/2) cos x so the elliptic solution is exactly cos x.
std::pair<ControlProblem, ExactSolution> make_elliptic_manufactured();

/// Loads a user problem from a JSON description whose coefficients are
/// expressions over t, x1..xd (see README for the schema).
CatalogEntry load_problem_file(const std::string& path);

}  // namespace bellman
