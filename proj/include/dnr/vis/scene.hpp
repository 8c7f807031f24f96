#pragma once

#include "dnr/timing.hpp"
#include "dnr/vis/render.hpp"

#include <optional>

namespace dnr::vis {

/// Fixed visualization setting: camera, transfer function overrides and marching parameters.
struct Scene {
  std::optional<Camera> camera;  // default: framing camera of the volume bounds
  int width = 128;
  int height = 128;
  nlohmann::json tf = nlohmann::json::object();  // overrides on top of the default ramp
  double step = 0.01;
  bool macrocells = true;
  bool early_exit = true;
};

inline Scene scene_from_json(const nlohmann::json& j) {
  Scene s;
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  if (j.contains("camera")) {
    Camera c;
    c.width = s.width;
    c.height = s.height;
    s.camera = camera_from_json(j["camera"], c);
  }
  if (j.contains("tf")) s.tf = j["tf"];
  s.step = j.value("step", s.step);
  s.macrocells = j.value("macrocells", s.macrocells);
  s.early_exit = j.value("early_exit", s.early_exit);
  if (!(s.step > 0.0)) throw ConfigError("render: step must be positive");
  return s;
}

/// Value interval the transfer function spans: the channel range for scalars, [0, max |v|] for vectors.
inline std::pair<double, double> render_domain(const volume::ValueRange& r) {
  if (r.channels() == 1) return {r.vmin[0], r.vmax[0] > r.vmin[0] ? r.vmax[0] : r.vmin[0] + 1.0};
  double m = 0.0;
  for (int c = 0; c < r.channels(); ++c) {
    const double a = std::max(std::abs(r.vmin[c]), std::abs(r.vmax[c]));
    m += a * a;
  }
  return {0.0, m > 0.0 ? std::sqrt(m) : 1.0};
}

inline TransferFunction scene_transfer_function(const Scene& s, const volume::ValueRange& r) {
  const auto [lo, hi] = render_domain(r);
  return transfer_function_from_json(s.tf, default_transfer_function(lo, hi));
}

inline Camera scene_camera(const Scene& s, const Box3& bounds) {
  return s.camera ? *s.camera : framing_camera(bounds, s.width, s.height);
}

struct SceneRender {
  Image image;
  RenderStats stats;
  /// Image, fragment and macro-cell memory held while rendering.
  std::size_t transient_bytes = 0;
  double seconds = 0.0;
};

/// Renders a DNR by direct network queries, one brick per rank.
inline SceneRender render_dnr(const dist::DnrModel& dnr, const Scene& s) {
  Stopwatch sw;
  SceneRender out;
  const auto tf = scene_transfer_function(s, dnr.range);
  std::vector<MacroCellGrid> cells;
  if (s.macrocells) cells = dnr_macrocells(dnr);
  RenderOptions opt;
  opt.march.step = s.step;
  opt.march.early_exit = s.early_exit;
  opt.use_macrocells = s.macrocells;
  out.image = render_sort_last(dnr_parts(dnr, s.macrocells ? &cells : nullptr), scene_camera(s, dnr.bounds()), tf,
                               opt, &out.stats);
  out.transient_bytes = out.image.bytes() + out.stats.fragment_bytes;
  for (const auto& c : cells) out.transient_bytes += c.bytes();
  out.seconds = sw.seconds();
  return out;
}

/// Renders a grid through its trilinear sampler.
inline SceneRender render_grid(const volume::GridVolume& vol, const Scene& s) {
  Stopwatch sw;
  SceneRender out;
  const auto range = volume::compute_range(vol);
  const auto tf = scene_transfer_function(s, range);
  auto parts = grid_parts(vol);
  MacroCellGrid cells;
  if (s.macrocells) {
    double span = 0.0;
    for (int c = 0; c < range.channels(); ++c) span = std::max(span, range.vmax[c] - range.vmin[c]);
    cells = build_macrocells(parts[0].sample, vol.bounds(), 16, 4, kMacroCellEpsilon * (span > 0.0 ? span : 1.0));
    parts[0].cells = &cells;
  }
  RenderOptions opt;
  opt.march.step = s.step;
  opt.march.early_exit = s.early_exit;
  opt.use_macrocells = s.macrocells;
  out.image = render_sort_last(parts, scene_camera(s, vol.bounds()), tf, opt, &out.stats);
  out.transient_bytes = out.image.bytes() + out.stats.fragment_bytes + (s.macrocells ? cells.bytes() : 0);
  out.seconds = sw.seconds();
  return out;
}

}  // namespace dnr::vis
