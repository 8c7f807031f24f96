#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dnr {

using Vec3 = Eigen::Vector3d;
using Index3 = std::array<int, 3>;

/// Raised for invalid user configuration (bad layouts, shapes, parameters).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a coordinate falls outside the domain of an operator.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised when a file on disk does not match the expected format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned physical box, closed on both ends.
struct Box3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }

  bool contains(const Vec3& p) const {
    for (int a = 0; a < 3; ++a) {
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
    }
    return true;
  }
};

/// Inclusive range of global voxel indices.
struct IndexBox {
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 0};

  Index3 dims() const { return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}; }

  std::size_t count() const {
    const auto d = dims();
    return static_cast<std::size_t>(d[0]) * d[1] * d[2];
  }

  bool contains(const Index3& i) const {
    for (int a = 0; a < 3; ++a) {
      if (i[a] < lo[a] || i[a] > hi[a]) return false;
    }
    return true;
  }

  bool contains(const IndexBox& o) const { return contains(o.lo) && contains(o.hi); }

  friend bool operator==(const IndexBox&, const IndexBox&) = default;
};

inline std::string to_string(const Index3& i) {
  return "(" + std::to_string(i[0]) + "," + std::to_string(i[1]) + "," + std::to_string(i[2]) + ")";
}

inline std::size_t product(const Index3& d) {
  return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(d[2]);
}

}  // namespace dnr
