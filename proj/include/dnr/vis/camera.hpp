#pragma once

#include "dnr/common.hpp"

#include <json.hpp>

#include <numbers>

namespace dnr::vis {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

/// Pinhole camera.
struct Camera {
  Vec3 position{2.0, 1.5, 2.5};
  Vec3 look_at{0.5, 0.5, 0.5};
  Vec3 up{0.0, 1.0, 0.0};
  double fov_deg = 35.0;
  int width = 128;
  int height = 128;

  void validate() const {
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw ConfigError("camera: fov must lie in (0, 180)");
    if (width < 1 || height < 1) throw ConfigError("camera: image size must be positive");
    const Vec3 fwd = look_at - position;
    if (fwd.norm() == 0.0) throw ConfigError("camera: position equals look_at");
    if (fwd.cross(up).norm() < 1e-12 * fwd.norm() * up.norm()) throw ConfigError("camera: up is parallel to view direction");
  }

  /// Ray through the centre of pixel (x, y); y = 0 is the top row.
  Ray ray(int x, int y) const {
    const Vec3 fwd = (look_at - position).normalized();
    const Vec3 right = fwd.cross(up).normalized();
    const Vec3 true_up = right.cross(fwd);
    const double half_h = std::tan(fov_deg * std::numbers::pi / 360.0);
    const double half_w = half_h * width / height;
    const double u = ((x + 0.5) / width * 2.0 - 1.0) * half_w;
    const double v = (1.0 - (y + 0.5) / height * 2.0) * half_h;
    return {position, (fwd + u * right + v * true_up).normalized()};
  }
};

/// Entry/exit parameters of a ray against a box; empty when t_out <= t_in.
struct Interval {
  double t_in = 0.0;
  double t_out = 0.0;
  bool empty() const { return !(t_out > t_in); }
};

inline Interval intersect(const Ray& r, const Box3& b) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (r.dir[a] == 0.0) {
      if (r.origin[a] < b.lo[a] || r.origin[a] > b.hi[a]) return {0.0, 0.0};
      continue;
    }
    const double inv = 1.0 / r.dir[a];
    double ta = (b.lo[a] - r.origin[a]) * inv;
    double tb = (b.hi[a] - r.origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  t0 = std::max(t0, 0.0);  // camera may sit inside the box
  if (!(t1 > t0)) return {0.0, 0.0};
  return {t0, t1};
}

inline nlohmann::json to_json(const Camera& c) {
  return {{"position", {c.position[0], c.position[1], c.position[2]}},
          {"look_at", {c.look_at[0], c.look_at[1], c.look_at[2]}},
          {"up", {c.up[0], c.up[1], c.up[2]}},
          {"fov_deg", c.fov_deg},
          {"width", c.width},
          {"height", c.height}};
}

inline Vec3 vec3_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw ConfigError("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

inline Camera camera_from_json(const nlohmann::json& j, Camera c = {}) {
  if (j.contains("position")) c.position = vec3_from_json(j["position"]);
  if (j.contains("look_at")) c.look_at = vec3_from_json(j["look_at"]);
  if (j.contains("up")) c.up = vec3_from_json(j["up"]);
  c.fov_deg = j.value("fov_deg", c.fov_deg);
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.validate();
  return c;
}

/// Camera looking at the centre of `b` from a fixed oblique direction, far enough to see all of it.
inline Camera framing_camera(const Box3& b, int width, int height) {
  Camera c;
  const Vec3 centre = 0.5 * (b.lo + b.hi);
  const double radius = 0.5 * b.extent().norm();
  c.look_at = centre;
  c.position = centre + Vec3(1.2, 0.9, 1.5).normalized() * (radius / std::sin(c.fov_deg * std::numbers::pi / 360.0));
  c.width = width;
  c.height = height;
  return c;
}

}  // namespace dnr::vis
