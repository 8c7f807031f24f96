#pragma once

#include "dnr/common.hpp"

#include <cmath>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace dnr::volume {

struct UniformMesh {
  Vec3 origin = Vec3::Zero();
  Vec3 spacing = Vec3::Ones();
};

struct RectilinearMesh {
  std::array<std::vector<double>, 3> coords;
};

using Mesh = std::variant<UniformMesh, RectilinearMesh>;

inline double mesh_coord(const Mesh& mesh, int axis, int i) {
  if (const auto* u = std::get_if<UniformMesh>(&mesh)) return u->origin[axis] + i * u->spacing[axis];
  return std::get<RectilinearMesh>(mesh).coords[axis][i];
}

/// Restriction of a mesh to the nodes of `box`; a uniform mesh keeps its spacing.
inline Mesh submesh(const Mesh& mesh, const IndexBox& box) {
  if (const auto* u = std::get_if<UniformMesh>(&mesh)) {
    UniformMesh um = *u;
    for (int a = 0; a < 3; ++a) um.origin[a] = mesh_coord(mesh, a, box.lo[a]);
    return um;
  }
  RectilinearMesh rm;
  const auto& src = std::get<RectilinearMesh>(mesh).coords;
  for (int a = 0; a < 3; ++a) rm.coords[a].assign(src[a].begin() + box.lo[a], src[a].begin() + box.hi[a] + 1);
  return rm;
}

/// Unit-cube uniform mesh for the given dims (nodes at i / (n - 1)).
inline UniformMesh unit_cube_mesh(const Index3& dims) {
  UniformMesh m;
  for (int a = 0; a < 3; ++a) m.spacing[a] = dims[a] > 1 ? 1.0 / (dims[a] - 1) : 1.0;
  return m;
}

/// Node-centered scalar or vector field on a uniform or rectilinear mesh.
/// Values are stored x-fastest with channels interleaved per node.
class GridVolume {
 public:
  GridVolume() = default;

  GridVolume(Index3 dims, Mesh mesh, int channels)
      : GridVolume(dims, std::move(mesh), channels,
                   std::vector<double>(product(dims) * static_cast<std::size_t>(std::max(channels, 0)), 0.0)) {}

  GridVolume(Index3 dims, Mesh mesh, int channels, std::vector<double> values)
      : dims_(dims), mesh_(std::move(mesh)), channels_(channels), values_(std::move(values)) {
    for (int a = 0; a < 3; ++a) {
      if (dims_[a] < 1) throw ConfigError("GridVolume: dims must be positive, got " + to_string(dims_));
    }
    if (channels_ < 1) throw ConfigError("GridVolume: channels must be >= 1");
    if (values_.size() != product(dims_) * static_cast<std::size_t>(channels_)) {
      throw ConfigError("GridVolume: value count " + std::to_string(values_.size()) + " does not match dims " +
                        to_string(dims_) + " x " + std::to_string(channels_) + " channels");
    }
    if (auto* r = std::get_if<RectilinearMesh>(&mesh_)) {
      for (int a = 0; a < 3; ++a) {
        const auto& c = r->coords[a];
        if (c.size() != static_cast<std::size_t>(dims_[a])) {
          throw ConfigError("GridVolume: rectilinear axis " + std::to_string(a) + " has " + std::to_string(c.size()) +
                            " coordinates, expected " + std::to_string(dims_[a]));
        }
        for (std::size_t i = 1; i < c.size(); ++i) {
          if (!(c[i] > c[i - 1])) throw ConfigError("GridVolume: rectilinear coordinates must be strictly increasing");
        }
      }
    } else {
      const auto& u = std::get<UniformMesh>(mesh_);
      for (int a = 0; a < 3; ++a) {
        if (!(u.spacing[a] > 0.0)) throw ConfigError("GridVolume: uniform spacing must be positive");
      }
    }
  }

  /// Builds a volume by evaluating `f(position, out)` at every node.
  template <typename F>
  static GridVolume from_function(Index3 dims, Mesh mesh, int channels, F&& f) {
    GridVolume v(dims, std::move(mesh), channels);
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          const std::size_t base = v.index(i, j, k) * channels;
          f(v.node_position(i, j, k), std::span<double>(v.values_.data() + base, channels));
        }
    return v;
  }

  const Index3& dims() const { return dims_; }
  int channels() const { return channels_; }
  const Mesh& mesh() const { return mesh_; }
  bool is_uniform() const { return std::holds_alternative<UniformMesh>(mesh_); }
  std::size_t node_count() const { return product(dims_); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }

  double at(int i, int j, int k, int c = 0) const { return values_[index(i, j, k) * channels_ + c]; }
  double& at(int i, int j, int k, int c = 0) { return values_[index(i, j, k) * channels_ + c]; }

  std::span<const double> node(int i, int j, int k) const {
    return {values_.data() + index(i, j, k) * channels_, static_cast<std::size_t>(channels_)};
  }

  double coord(int axis, int i) const { return mesh_coord(mesh_, axis, i); }

  Vec3 node_position(int i, int j, int k) const { return {coord(0, i), coord(1, j), coord(2, k)}; }

  Box3 bounds() const {
    Box3 b;
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = coord(a, 0);
      b.hi[a] = coord(a, dims_[a] - 1);
    }
    return b;
  }

  /// Cell index and fractional offset of physical coordinate x along `axis`.
  /// x must lie within the axis bounds.
  std::pair<int, double> locate(int axis, double x) const {
    const int n = dims_[axis];
    if (n == 1) return {0, 0.0};
    if (const auto* u = std::get_if<UniformMesh>(&mesh_)) {
      double s = (x - u->origin[axis]) / u->spacing[axis];
      // snap roundoff so that node positions reproduce node values exactly
      if (const double r = std::round(s); std::abs(s - r) < 1e-9) s = r;
      int i = static_cast<int>(std::floor(s));
      i = std::clamp(i, 0, n - 2);
      return {i, std::clamp(s - i, 0.0, 1.0)};
    }
    const auto& c = std::get<RectilinearMesh>(mesh_).coords[axis];
    auto it = std::upper_bound(c.begin(), c.end(), x);
    int i = static_cast<int>(it - c.begin()) - 1;
    i = std::clamp(i, 0, n - 2);
    return {i, std::clamp((x - c[i]) / (c[i + 1] - c[i]), 0.0, 1.0)};
  }

  /// Copy of the nodes inside `box` (inclusive) with the matching mesh restriction.
  GridVolume subvolume(const IndexBox& box) const {
    if (!IndexBox{{0, 0, 0}, {dims_[0] - 1, dims_[1] - 1, dims_[2] - 1}}.contains(box)) {
      throw DomainError("GridVolume::subvolume: box outside volume");
    }
    const Index3 d = box.dims();
    GridVolume out(d, submesh(mesh_, box), channels_);
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          auto src = node(box.lo[0] + i, box.lo[1] + j, box.lo[2] + k);
          std::copy(src.begin(), src.end(), out.values_.begin() + out.index(i, j, k) * channels_);
        }
    return out;
  }

  friend bool operator==(const GridVolume& a, const GridVolume& b) {
    if (a.dims_ != b.dims_ || a.channels_ != b.channels_ || a.values_ != b.values_) return false;
    for (int axis = 0; axis < 3; ++axis)
      for (int i = 0; i < a.dims_[axis]; ++i)
        if (a.coord(axis, i) != b.coord(axis, i)) return false;
    return true;
  }

 private:
  Index3 dims_{0, 0, 0};
  Mesh mesh_;
  int channels_ = 0;
  std::vector<double> values_;
};

/// Trilinear interpolation of all channels at physical point p.
/// Points within a tiny relative tolerance of the bounds are clamped onto them.
inline void sample_trilinear(const GridVolume& vol, const Vec3& p, std::span<double> out) {
  const Box3 b = vol.bounds();
  Vec3 q = p;
  for (int a = 0; a < 3; ++a) {
    const double tol = 1e-10 * std::max(1.0, std::abs(b.hi[a] - b.lo[a]));
    if (!(q[a] >= b.lo[a] - tol && q[a] <= b.hi[a] + tol)) {
      throw DomainError("sample_trilinear: point outside volume bounds");
    }
    q[a] = std::clamp(q[a], b.lo[a], b.hi[a]);
  }
  const auto [i, fx] = vol.locate(0, q[0]);
  const auto [j, fy] = vol.locate(1, q[1]);
  const auto [k, fz] = vol.locate(2, q[2]);
  const Index3& d = vol.dims();
  const int i1 = d[0] > 1 ? i + 1 : i;
  const int j1 = d[1] > 1 ? j + 1 : j;
  const int k1 = d[2] > 1 ? k + 1 : k;
  const int ch = vol.channels();
  for (int c = 0; c < ch; ++c) {
    const double c00 = vol.at(i, j, k, c) * (1 - fx) + vol.at(i1, j, k, c) * fx;
    const double c10 = vol.at(i, j1, k, c) * (1 - fx) + vol.at(i1, j1, k, c) * fx;
    const double c01 = vol.at(i, j, k1, c) * (1 - fx) + vol.at(i1, j, k1, c) * fx;
    const double c11 = vol.at(i, j1, k1, c) * (1 - fx) + vol.at(i1, j1, k1, c) * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    out[c] = c0 * (1 - fz) + c1 * fz;
  }
}

inline std::vector<double> sample_trilinear(const GridVolume& vol, const Vec3& p) {
  std::vector<double> out(vol.channels());
  sample_trilinear(vol, p, out);
  return out;
}

}  // namespace dnr::volume
