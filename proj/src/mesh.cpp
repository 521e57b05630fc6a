#include "bellman/mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace bellman {

Mesh build_mesh(const MeshSpec& spec) {
    if (!(spec.horizon > 0.0)) throw std::invalid_argument("mesh: horizon T must be positive");
    if (!(spec.tau > 0.0)) throw std::invalid_argument("mesh: tau must be positive");
    if (!(spec.h > 0.0)) throw std::invalid_argument("mesh: h must be positive");
    if (spec.directions.empty()) throw std::invalid_argument("mesh: direction list is empty");
    if (spec.index_radius < 1) throw std::invalid_argument("mesh: index_radius must be >= 1");
    if (spec.origin.empty()) throw std::invalid_argument("mesh: origin must have dimension >= 1");
    for (const auto& l : spec.directions) {
        if (l.size() != spec.origin.size())
            throw std::invalid_argument("mesh: direction dimension does not match origin");
    }

    Mesh mesh;
    mesh.spec_ = spec;

    // Levels (j*tau) ^ T; absolute tolerance decides whether T lands on the
    // tau progression so the final step never degenerates to length ~0.
    const double tol = 1e-12 * spec.horizon;
    for (std::int64_t j = 0;; ++j) {
        const double t = static_cast<double>(j) * spec.tau;
        if (t >= spec.horizon - tol) break;
        mesh.time_levels_.push_back(t);
        if (j > (1 << 30)) throw std::invalid_argument("mesh: too many time levels");
    }
    mesh.time_levels_.push_back(spec.horizon);

    const int d1 = static_cast<int>(spec.directions.size());
    const std::int64_t width = 2 * static_cast<std::int64_t>(spec.index_radius) + 1;
    mesh.strides_.resize(d1);
    std::int64_t n = 1;
    for (int k = 0; k < d1; ++k) {
        mesh.strides_[k] = n;
        if (n > (std::int64_t(1) << 28) / width)
            throw std::invalid_argument("mesh: index box too large");
        n *= width;
    }
    mesh.num_nodes_ = n;
    return mesh;
}

std::int64_t Mesh::encode(std::span<const int> multi) const {
    const int R = spec_.index_radius;
    std::int64_t flat = 0;
    for (std::size_t k = 0; k < multi.size(); ++k) {
        flat += static_cast<std::int64_t>(multi[k] + R) * strides_[k];
    }
    return flat;
}

void Mesh::decode(std::int64_t flat, std::span<int> multi) const {
    const int R = spec_.index_radius;
    const std::int64_t w = width();
    for (std::size_t k = 0; k < multi.size(); ++k) {
        multi[k] = static_cast<int>((flat / strides_[k]) % w) - R;
    }
}

int Mesh::component(std::int64_t flat, int k) const {
    return static_cast<int>((flat / strides_[k - 1]) % width()) - spec_.index_radius;
}

void Mesh::position(std::int64_t flat, std::span<double> out) const {
    const int d = dim();
    for (int m = 0; m < d; ++m) out[m] = spec_.origin[m];
    const int d1 = num_directions();
    for (int k = 1; k <= d1; ++k) {
        const double step = spec_.h * component(flat, k);
        if (step == 0.0) continue;
        const auto& l = spec_.directions[k - 1];
        for (int m = 0; m < d; ++m) out[m] += step * l[m];
    }
}

std::vector<double> Mesh::position(std::int64_t flat) const {
    std::vector<double> x(dim());
    position(flat, x);
    return x;
}

std::int64_t Mesh::neighbor_index(std::int64_t flat, int signed_k) const {
    const int k = signed_k > 0 ? signed_k : -signed_k;
    const int step = signed_k > 0 ? 1 : -1;
    const int c = component(flat, k);
    if (c + step > spec_.index_radius || c + step < -spec_.index_radius) return -1;
    return flat + step * strides_[k - 1];
}

std::int64_t Mesh::clamped_neighbor_index(std::int64_t flat, int signed_k) const {
    const std::int64_t nb = neighbor_index(flat, signed_k);
    return nb >= 0 ? nb : flat;
}

void Mesh::neighbor_position(std::int64_t flat, int signed_k, std::span<double> out) const {
    position(flat, out);
    const int k = signed_k > 0 ? signed_k : -signed_k;
    const double step = (signed_k > 0 ? 1.0 : -1.0) * spec_.h;
    const auto& l = spec_.directions[k - 1];
    for (int m = 0; m < dim(); ++m) out[m] += step * l[m];
}

double tau_T(const Mesh& mesh, double t) {
    const double T = mesh.horizon();
    if (t >= T) throw std::domain_error("tau_T: t must be strictly below T");
    const double tol = 1e-12 * std::max(1.0, T);
    bool on_mesh = false;
    for (double level : mesh.time_levels()) {
        if (std::abs(level - t) <= tol) {
            on_mesh = true;
            break;
        }
    }
    if (!on_mesh) throw std::domain_error("tau_T: t is not a mesh time level");
    return std::min(mesh.tau(), T - t);
}

GridFunction::GridFunction(std::shared_ptr<const Mesh> mesh)
    : mesh_(std::move(mesh)),
      nodes_(mesh_->num_nodes()),
      values_(static_cast<std::size_t>(mesh_->num_levels()) * nodes_, 0.0) {}

bool GridFunction::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double neighbor_value(const Mesh& mesh, std::span<const double> slice,
                      std::int64_t node, int signed_k, const ExteriorPolicy& policy) {
    const std::int64_t nb = mesh.neighbor_index(node, signed_k);
    if (nb >= 0) return slice[nb];
    switch (policy.kind) {
        case ExteriorPolicy::Kind::clamp:
            return slice[mesh.clamped_neighbor_index(node, signed_k)];
        case ExteriorPolicy::Kind::constant:
            return policy.constant_value;
        case ExteriorPolicy::Kind::extend_terminal: {
            std::vector<double> x(mesh.dim());
            mesh.neighbor_position(node, signed_k, x);
            return policy.terminal(x);
        }
    }
    return 0.0;  // unreachable
}

double neighbor_value(const GridFunction& u, int level, std::int64_t node,
                      int signed_k, const ExteriorPolicy& policy) {
    return neighbor_value(u.mesh(), u.level(level), node, signed_k, policy);
}

}  // namespace bellman
