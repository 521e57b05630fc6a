#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bellman/mesh.hpp"

namespace bellman {

using SpaceTimeFn = std::function<double(double, std::span<const double>)>;
using SpaceFn = std::function<double(std::span<const double>)>;

/// Storage slot for a signed direction k in {+-1..+-d1};
/// ordering is +1, -1, +2, -2, ...
inline int signed_slot(int signed_k) {
    const int k = signed_k > 0 ? signed_k : -signed_k;
    return 2 * (k - 1) + (signed_k < 0 ? 1 : 0);
}

/// Coefficients of a single control: sigma_k (one per direction pair,
/// mirrored onto -k), drift b_k per signed direction, discount c and
/// running source f. All evaluators must be pure and reentrant.
struct ControlCoefficients {
    std::vector<SpaceTimeFn> sigma;  // size d1
    std::vector<SpaceTimeFn> drift;  // size 2*d1, signed_slot order
    SpaceTimeFn discount;            // c >= lambda
    SpaceTimeFn source;              // f
    std::string label;
};

/// A Bellman control problem: finite control set, coefficient evaluators,
/// terminal data g and declared constants K (bound / Lipschitz) and
/// lambda (lower bound on c).
struct ControlProblem {
    std::string name;
    int dim = 1;             // d
    int num_directions = 1;  // d1
    std::vector<ControlCoefficients> controls;
    SpaceFn terminal;
    double bound = 1.0;  // K
    double lambda = 0.0;

    std::size_t num_controls() const { return controls.size(); }

    double sigma(std::size_t ctrl, int k, double t, std::span<const double> x) const {
        return controls[ctrl].sigma[k - 1](t, x);
    }
    /// a_k = (1/2) sigma_k^2, always derived at evaluation time.
    double diffusion(std::size_t ctrl, int k, double t, std::span<const double> x) const {
        const double s = controls[ctrl].sigma[k - 1](t, x);
        return 0.5 * s * s;
    }
    double drift(std::size_t ctrl, int signed_k, double t, std::span<const double> x) const {
        return controls[ctrl].drift[signed_slot(signed_k)](t, x);
    }
    double discount(std::size_t ctrl, double t, std::span<const double> x) const {
        return controls[ctrl].discount(t, x);
    }
    double source(std::size_t ctrl, double t, std::span<const double> x) const {
        return controls[ctrl].source(t, x);
    }
};

/// A known continuous solution used as a verification oracle.
struct ExactSolution {
    SpaceTimeFn value;
    std::string description;
};

/// Outcome of sampling-based validation of a problem against its declared
/// constants. Hard violations (b_k < 0, c < lambda, non-finite values,
/// missing evaluators) fail the run; bound/Lipschitz excesses are reported.
struct ValidationReport {
    bool pass = true;
    std::vector<std::string> violations;  // hard failures with (alpha,k,t,x)
    double max_abs_value = 0.0;           // observed sup over psi in {sigma,b,c-lambda,f,g}
    double max_space_quotient = 0.0;      // observed |psi(t,x)-psi(t,y)|/|x-y|
    double max_time_quotient_sqrt = 0.0;  // observed |psi(t,x)-psi(s,x)|/|t-s|^{1/2}
    bool bound_exceeded = false;          // any observed statistic above K
};

ValidationReport validate(const ControlProblem& problem, const Mesh& mesh,
                          std::uint64_t seed = 0x9e3779b97f4a7c15ull);

}  // namespace bellman
