#pragma once

#include "dnr/common.hpp"

#include <json.hpp>

#include <array>

namespace dnr::vis {

struct Rgba {
  double r = 0, g = 0, b = 0, a = 0;
};

struct ControlPoint {
  double s = 0.0;  // normalized scalar in [0,1]
  Rgba c;
};

/// Piecewise-linear scalar -> RGBA map. Scalars are normalized through [domain_lo, domain_hi].
struct TransferFunction {
  std::vector<ControlPoint> points;
  double opacity_scale = 1.0;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  /// Step length at which the tabulated opacities apply.
  double base_step = 0.01;

  void validate() const {
    if (points.empty()) throw ConfigError("transfer function: needs at least one control point");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i && !(points[i].s >= points[i - 1].s)) throw ConfigError("transfer function: control points not sorted");
      if (!(points[i].c.a >= 0.0 && points[i].c.a <= 1.0)) throw ConfigError("transfer function: alpha outside [0,1]");
    }
    if (!(opacity_scale >= 0.0)) throw ConfigError("transfer function: opacity scale must be non-negative");
    if (!(domain_hi > domain_lo)) throw ConfigError("transfer function: empty domain");
    if (!(base_step > 0.0)) throw ConfigError("transfer function: base_step must be positive");
  }

  double normalize(double v) const { return (v - domain_lo) / (domain_hi - domain_lo); }

  /// Colour and opacity (already scaled, clamped to [0,1]) at data value v.
  Rgba operator()(double v) const {
    const double s = normalize(v);
    Rgba out;
    if (s <= points.front().s) {
      out = points.front().c;
    } else if (s >= points.back().s) {
      out = points.back().c;
    } else {
      std::size_t i = 1;
      while (points[i].s < s) ++i;
      const auto& p0 = points[i - 1];
      const auto& p1 = points[i];
      const double w = p1.s > p0.s ? (s - p0.s) / (p1.s - p0.s) : 1.0;
      out = {p0.c.r + w * (p1.c.r - p0.c.r), p0.c.g + w * (p1.c.g - p0.c.g), p0.c.b + w * (p1.c.b - p0.c.b),
             p0.c.a + w * (p1.c.a - p0.c.a)};
    }
    out.a = std::clamp(out.a * opacity_scale, 0.0, 1.0);
    return out;
  }

  /// Exact maximum of the scaled opacity over data values in [lo, hi].
  double max_alpha(double lo, double hi) const {
    double m = std::max((*this)(lo).a, (*this)(hi).a);
    const double slo = normalize(lo), shi = normalize(hi);
    for (const auto& p : points)
      if (p.s >= slo && p.s <= shi) m = std::max(m, std::clamp(p.c.a * opacity_scale, 0.0, 1.0));
    return m;
  }

  /// Opacity of one sample taken with spacing `step`.
  double corrected_alpha(double a_tf, double step) const {
    if (a_tf >= 1.0) return 1.0;
    return 1.0 - std::pow(1.0 - a_tf, step / base_step);
  }
};

/// Transparent below `threshold`, then a warm ramp; used as the default scene.
inline TransferFunction default_transfer_function(double lo, double hi, double threshold = 0.2) {
  TransferFunction tf;
  tf.domain_lo = lo;
  tf.domain_hi = hi;
  tf.points = {{0.0, {0.0, 0.0, 0.0, 0.0}},
               {threshold, {0.1, 0.2, 0.8, 0.0}},
               {0.5, {0.2, 0.8, 0.6, 0.15}},
               {0.8, {0.9, 0.7, 0.2, 0.4}},
               {1.0, {1.0, 0.2, 0.1, 0.8}}};
  return tf;
}

inline TransferFunction transfer_function_from_json(const nlohmann::json& j, TransferFunction tf) {
  if (j.contains("points")) {
    tf.points.clear();
    for (const auto& p : j["points"]) {
      const auto v = p.get<std::vector<double>>();
      if (v.size() != 5) throw ConfigError("transfer function point must be [s, r, g, b, a]");
      tf.points.push_back({v[0], {v[1], v[2], v[3], v[4]}});
    }
  }
  tf.opacity_scale = j.value("opacity_scale", tf.opacity_scale);
  if (j.contains("domain")) {
    const auto d = j["domain"].get<std::vector<double>>();
    if (d.size() != 2) throw ConfigError("transfer function domain must be [lo, hi]");
    tf.domain_lo = d[0];
    tf.domain_hi = d[1];
  }
  tf.base_step = j.value("base_step", tf.base_step);
  tf.validate();
  return tf;
}

inline nlohmann::json to_json(const TransferFunction& tf) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : tf.points) pts.push_back({p.s, p.c.r, p.c.g, p.c.b, p.c.a});
  return {{"points", pts},
          {"opacity_scale", tf.opacity_scale},
          {"domain", {tf.domain_lo, tf.domain_hi}},
          {"base_step", tf.base_step}};
}

}  // namespace dnr::vis
