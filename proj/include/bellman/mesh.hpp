#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace bellman {

/// How grid reads outside the index box |i_k| <= R are resolved.
struct ExteriorPolicy {
    enum class Kind { clamp, extend_terminal, constant };

    Kind kind = Kind::clamp;
    double constant_value = 0.0;
    /// Terminal evaluator used by extend_terminal; called with the
    /// exterior physical position.
    std::function<double(std::span<const double>)> terminal;

    static ExteriorPolicy clamp() { return {}; }

    static ExteriorPolicy extend_terminal(std::function<double(std::span<const double>)> g) {
        ExteriorPolicy p;
        p.kind = Kind::extend_terminal;
        p.terminal = std::move(g);
        return p;
    }

    static ExteriorPolicy constant(double v) {
        ExteriorPolicy p;
        p.kind = Kind::constant;
        p.constant_value = v;
        return p;
    }
};

/// Parameters generating the space-time mesh: horizon T, steps (tau, h),
/// direction vectors l_1..l_{d1} (l_{-k} is realized as -l_k and never
/// stored), origin x0 and the index radius R bounding |i_k| <= R.
struct MeshSpec {
    double horizon = 1.0;  // T
    double tau = 0.1;
    double h = 0.1;
    std::vector<std::vector<double>> directions;  // d1 vectors in R^d
    std::vector<double> origin;                   // x0 in R^d
    int index_radius = 10;                        // R
};

/// The discrete domain: time levels t_j = (j*tau) ^ T and the spatial
/// index lattice I = {-R..R}^{d1} with positions x0 + h * sum_k i_k l_k.
/// Immutable after construction; safe to share across threads.
class Mesh {
public:
    const MeshSpec& spec() const { return spec_; }
    double horizon() const { return spec_.horizon; }
    double tau() const { return spec_.tau; }
    double h() const { return spec_.h; }
    int dim() const { return static_cast<int>(spec_.origin.size()); }
    int num_directions() const { return static_cast<int>(spec_.directions.size()); }
    int index_radius() const { return spec_.index_radius; }

    const std::vector<double>& time_levels() const { return time_levels_; }
    int num_levels() const { return static_cast<int>(time_levels_.size()); }
    /// Number of time steps n; levels are t_0..t_n.
    int n_time() const { return num_levels() - 1; }

    std::int64_t num_nodes() const { return num_nodes_; }
    int width() const { return 2 * spec_.index_radius + 1; }

    std::int64_t encode(std::span<const int> multi) const;
    void decode(std::int64_t flat, std::span<int> multi) const;
    int component(std::int64_t flat, int k) const;  // i_k for k = 1..d1

    /// Physical position of the node with flat index `flat`.
    void position(std::int64_t flat, std::span<double> out) const;
    std::vector<double> position(std::int64_t flat) const;

    /// Flat index of the node one step along signed direction k
    /// (k in {+-1..+-d1}), or -1 when the step leaves the index box.
    std::int64_t neighbor_index(std::int64_t flat, int signed_k) const;

    /// Nearest in-box node to the (out-of-box) step along signed k;
    /// equals `flat` itself for a single step off the boundary.
    std::int64_t clamped_neighbor_index(std::int64_t flat, int signed_k) const;

    /// Position of the (possibly exterior) neighbor along signed k.
    void neighbor_position(std::int64_t flat, int signed_k, std::span<double> out) const;

private:
    friend Mesh build_mesh(const MeshSpec&);

    MeshSpec spec_;
    std::vector<double> time_levels_;
    std::vector<std::int64_t> strides_;
    std::int64_t num_nodes_ = 0;
};

/// Builds the mesh, validating the spec. Time levels are (j*tau) ^ T with
/// a 1e-12*T tolerance deciding whether T is already a multiple of tau.
Mesh build_mesh(const MeshSpec& spec);

/// tau_T(t) = tau ^ (T - t); t must be an on-mesh level strictly below T.
double tau_T(const Mesh& mesh, double t);

/// Scalar values indexed by (time level, spatial node).
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(std::shared_ptr<const Mesh> mesh);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }

    double at(int level, std::int64_t node) const {
        return values_[static_cast<std::size_t>(level) * nodes_ + node];
    }
    double& at(int level, std::int64_t node) {
        return values_[static_cast<std::size_t>(level) * nodes_ + node];
    }

    std::span<double> level(int j) {
        return {values_.data() + static_cast<std::size_t>(j) * nodes_,
                static_cast<std::size_t>(nodes_)};
    }
    std::span<const double> level(int j) const {
        return {values_.data() + static_cast<std::size_t>(j) * nodes_,
                static_cast<std::size_t>(nodes_)};
    }

    std::span<const double> flat() const { return values_; }
    std::span<double> flat() { return values_; }

    bool all_finite() const;

private:
    std::shared_ptr<const Mesh> mesh_;
    std::int64_t nodes_ = 0;
    std::vector<double> values_;
};

/// Value of u one step along signed direction k from (level, node); exterior
/// steps are resolved by the policy, so the function is total.
double neighbor_value(const GridFunction& u, int level, std::int64_t node,
                      int signed_k, const ExteriorPolicy& policy);

/// Same lookup against a single spatial slice of values.
double neighbor_value(const Mesh& mesh, std::span<const double> slice,
                      std::int64_t node, int signed_k, const ExteriorPolicy& policy);

}  // namespace bellman
