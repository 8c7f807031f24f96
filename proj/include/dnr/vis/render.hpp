#pragma once

#include "dnr/dist/dnr_model.hpp"
#include "dnr/vis/camera.hpp"
#include "dnr/vis/image.hpp"
#include "dnr/vis/transfer_function.hpp"

#include <algorithm>
#include <numeric>

namespace dnr::vis {

/// Scalar used for rendering: the value itself, or the magnitude of a vector sample.
inline double render_scalar(std::span<const double> v) {
  if (v.size() == 1) return v[0];
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Premultiplied colour, opacity and entry depth of one ray interval.
struct Fragment {
  double r = 0, g = 0, b = 0, a = 0;
  double depth = std::numeric_limits<double>::infinity();
  bool hit = false;
};

/// Front-to-back "over": `front` then `back`.
inline Fragment composite(const Fragment& front, const Fragment& back) {
  const double t = 1.0 - front.a;
  Fragment out;
  out.r = front.r + t * back.r;
  out.g = front.g + t * back.g;
  out.b = front.b + t * back.b;
  out.a = front.a + t * back.a;
  out.depth = std::min(front.depth, back.depth);
  out.hit = front.hit || back.hit;
  return out;
}

/// Coarse min/max grid over a box. Ranges are padded by `pad` (data units).
struct MacroCellGrid {
  Box3 bounds;
  int resolution = 16;
  std::vector<double> vmin, vmax;
  std::vector<std::uint8_t> empty;  // per cell, for the transfer function last classified with

  std::size_t cell_count() const { return static_cast<std::size_t>(resolution) * resolution * resolution; }
  std::size_t bytes() const { return cell_count() * (2 * sizeof(double) + 1); }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + resolution * (static_cast<std::size_t>(j) + resolution * k);
  }

  Index3 cell_of(const Vec3& p) const {
    Index3 c;
    for (int a = 0; a < 3; ++a) {
      const double ext = bounds.hi[a] - bounds.lo[a];
      const double s = ext > 0 ? (p[a] - bounds.lo[a]) / ext * resolution : 0.0;
      c[a] = std::clamp(static_cast<int>(std::floor(s)), 0, resolution - 1);
    }
    return c;
  }

  Box3 cell_box(const Index3& c) const {
    Box3 b;
    for (int a = 0; a < 3; ++a) {
      const double ext = bounds.hi[a] - bounds.lo[a];
      b.lo[a] = bounds.lo[a] + ext * c[a] / resolution;
      b.hi[a] = c[a] + 1 == resolution ? bounds.hi[a] : bounds.lo[a] + ext * (c[a] + 1) / resolution;
    }
    return b;
  }

  /// Marks cells whose whole range maps to zero opacity.
  void classify(const TransferFunction& tf) {
    empty.assign(cell_count(), 0);
    for (std::size_t i = 0; i < cell_count(); ++i) empty[i] = tf.max_alpha(vmin[i], vmax[i]) == 0.0;
  }

  /// Position of probe (i, j, k) of the probe lattice (probes_per_axis per cell, shared faces).
  static Vec3 probe_position(const Box3& b, int lattice, int i, int j, int k) {
    const int idx[3] = {i, j, k};
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      p[a] = idx[a] + 1 == lattice ? b.hi[a] : b.lo[a] + (b.hi[a] - b.lo[a]) * idx[a] / (lattice - 1);
    }
    return p;
  }
};

/// Probes `sample` on a lattice with `probes_per_axis` points per cell edge (shared between
/// neighbouring cells) and records each cell's padded min/max.
template <typename Sample>
MacroCellGrid build_macrocells(Sample&& sample, const Box3& bounds, int resolution = 16, int probes_per_axis = 4,
                               double pad = 0.0) {
  if (resolution < 1 || probes_per_axis < 2) throw ConfigError("build_macrocells: bad resolution");
  MacroCellGrid g;
  g.bounds = bounds;
  g.resolution = resolution;
  g.vmin.assign(g.cell_count(), std::numeric_limits<double>::infinity());
  g.vmax.assign(g.cell_count(), -std::numeric_limits<double>::infinity());
  const int step = probes_per_axis - 1;
  const int lattice = resolution * step + 1;
  std::vector<double> vals(static_cast<std::size_t>(lattice) * lattice * lattice);
  for (int k = 0; k < lattice; ++k)
    for (int j = 0; j < lattice; ++j)
      for (int i = 0; i < lattice; ++i)
        vals[i + static_cast<std::size_t>(lattice) * (j + static_cast<std::size_t>(lattice) * k)] =
            sample(MacroCellGrid::probe_position(bounds, lattice, i, j, k));
  for (int ck = 0; ck < resolution; ++ck)
    for (int cj = 0; cj < resolution; ++cj)
      for (int ci = 0; ci < resolution; ++ci) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int k = ck * step; k <= (ck + 1) * step; ++k)
          for (int j = cj * step; j <= (cj + 1) * step; ++j)
            for (int i = ci * step; i <= (ci + 1) * step; ++i) {
              const double v = vals[i + static_cast<std::size_t>(lattice) * (j + static_cast<std::size_t>(lattice) * k)];
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
        g.vmin[g.index(ci, cj, ck)] = lo - pad;
        g.vmax[g.index(ci, cj, ck)] = hi + pad;
      }
  return g;
}

struct MarchOptions {
  double step = 0.01;
  bool early_exit = true;
  double early_exit_alpha = 0.99;
};

struct MarchStats {
  std::uint64_t samples = 0;
  std::uint64_t skipped_cells = 0;
};

/// Front-to-back emission-absorption over [t0, t1). Samples sit at t = k * step for integer k,
/// so splitting an interval anywhere partitions the samples exactly.
template <typename Sample>
Fragment ray_march(Sample&& sample, const Ray& ray, double t0, double t1, const TransferFunction& tf,
                   const MarchOptions& opt, const MacroCellGrid* cells = nullptr, MarchStats* stats = nullptr) {
  Fragment f;
  if (!(t1 > t0)) return f;
  f.depth = t0;
  f.hit = true;
  long k = static_cast<long>(std::ceil(t0 / opt.step));
  while (k * opt.step < t0) ++k;
  while ((k - 1) * opt.step >= t0) --k;
  double A = 0.0, R = 0.0, G = 0.0, B = 0.0;
  for (;; ++k) {
    const double t = k * opt.step;
    if (!(t < t1)) break;
    const Vec3 p = ray.origin + t * ray.dir;
    if (cells) {
      const Index3 c = cells->cell_of(p);
      if (cells->empty[cells->index(c[0], c[1], c[2])]) {
        const Interval iv = intersect(ray, cells->cell_box(c));
        long next = static_cast<long>(std::ceil(iv.t_out / opt.step));
        if (next <= k) next = k + 1;
        k = next - 1;
        if (stats) ++stats->skipped_cells;
        continue;
      }
    }
    const double v = sample(p);
    if (stats) ++stats->samples;
    const Rgba c = tf(v);
    if (c.a <= 0.0) continue;
    const double a = tf.corrected_alpha(c.a, opt.step);
    const double w = (1.0 - A) * a;
    R += w * c.r;
    G += w * c.g;
    B += w * c.b;
    A += w;
    if (opt.early_exit && A >= opt.early_exit_alpha) break;
  }
  f.r = R;
  f.g = G;
  f.b = B;
  f.a = A;
  return f;
}

/// One brick of a sort-last render: its box and a scalar sampler valid inside it.
struct RenderPart {
  Box3 bounds;
  std::function<double(const Vec3&)> sample;
  const MacroCellGrid* cells = nullptr;
};

struct RenderOptions {
  MarchOptions march;
  Rgba background{0.0, 0.0, 0.0, 1.0};
  bool use_macrocells = true;
  /// Order in which rank fragment streams reach the compositor; empty means rank order.
  std::vector<int> arrival_order;
};

struct RenderStats {
  MarchStats march;
  std::size_t fragment_bytes = 0;
};

/// Each part marches its own ray interval; per-pixel fragments are sorted by entry depth and
/// blended front to back, then over the background.
inline Image render_sort_last(const std::vector<RenderPart>& parts, const Camera& cam, const TransferFunction& tf,
                              const RenderOptions& opt = {}, RenderStats* stats = nullptr) {
  cam.validate();
  tf.validate();
  if (!(opt.march.step > 0.0)) throw ConfigError("render: step must be positive");
  const int n = static_cast<int>(parts.size());
  const std::size_t pixels = static_cast<std::size_t>(cam.width) * cam.height;
  std::vector<std::vector<Fragment>> frags(n, std::vector<Fragment>(pixels));
  std::vector<MarchStats> mstats(n);
  std::vector<std::vector<std::uint8_t>> masks(n);
  for (int r = 0; r < n; ++r)
    if (opt.use_macrocells && parts[r].cells) {
      auto cells = *parts[r].cells;
      cells.classify(tf);
      masks[r] = std::move(cells.empty);
    }
  dist::parallel_for(n, [&](int r) {
    const RenderPart& part = parts[r];
    MacroCellGrid local;
    const MacroCellGrid* cells = nullptr;
    if (!masks[r].empty()) {
      local.bounds = part.cells->bounds;
      local.resolution = part.cells->resolution;
      local.empty = masks[r];
      cells = &local;
    }
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        const Ray ray = cam.ray(x, y);
        const Interval iv = intersect(ray, part.bounds);
        if (iv.empty()) continue;
        frags[r][static_cast<std::size_t>(y) * cam.width + x] =
            ray_march(part.sample, ray, iv.t_in, iv.t_out, tf, opt.march, cells, &mstats[r]);
      }
  });

  std::vector<int> order = opt.arrival_order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
  }
  if (static_cast<int>(order.size()) != n) throw ConfigError("render: arrival order has wrong length");
  Image img(cam.width, cam.height);
  std::vector<std::pair<const Fragment*, int>> list;
  for (std::size_t px = 0; px < pixels; ++px) {
    list.clear();
    for (int r : order)
      if (frags[r][px].hit) list.emplace_back(&frags[r][px], r);
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return a.first->depth != b.first->depth ? a.first->depth < b.first->depth : a.second < b.second;
    });
    Fragment acc;
    for (const auto& [f, r] : list) acc = composite(acc, *f);
    const double t = 1.0 - acc.a;
    double* p = &img.rgba[px * 4];
    p[0] = acc.r + t * opt.background.r * opt.background.a;
    p[1] = acc.g + t * opt.background.g * opt.background.a;
    p[2] = acc.b + t * opt.background.b * opt.background.a;
    p[3] = std::clamp(acc.a, 0.0, 1.0);
  }
  if (stats) {
    for (const auto& s : mstats) {
      stats->march.samples += s.samples;
      stats->march.skipped_cells += s.skipped_cells;
    }
    stats->fragment_bytes = static_cast<std::size_t>(n) * pixels * sizeof(Fragment);
  }
  return img;
}

/// Single-brick grid backend (trilinear sampler).
inline std::vector<RenderPart> grid_parts(const volume::GridVolume& vol) {
  return {{vol.bounds(), [&vol](const Vec3& p) {
             thread_local std::vector<double> v;
             v.resize(vol.channels());
             volume::sample_trilinear(vol, p, v);
             return render_scalar(v);
           }}};
}

/// Grid backend split along a decomposition: each brick samples the global grid inside its bounds.
inline std::vector<RenderPart> grid_parts(const volume::GridVolume& vol, const volume::Decomposition& dec) {
  std::vector<RenderPart> parts;
  for (const auto& p : dec.partitions) parts.push_back({p.world_bounds, grid_parts(vol)[0].sample});
  return parts;
}

/// Per-rank DNR backend: rank r marches its own bricks with its own network, no decoding.
inline std::vector<RenderPart> dnr_parts(const dist::DnrModel& dnr, const std::vector<MacroCellGrid>* cells = nullptr) {
  std::vector<RenderPart> parts;
  for (const auto& part : dnr.decomposition.partitions) {
    const int r = part.rank;
    RenderPart rp;
    rp.bounds = part.world_bounds;
    rp.sample = [&dnr, r](const Vec3& p) {
      thread_local std::vector<double> v;
      v.resize(dnr.channels());
      dnr.eval_rank(r, p, v);
      for (int c = 0; c < dnr.channels(); ++c) v[c] = dnr.range.denormalize(v[c], c);
      return render_scalar(v);
    };
    if (cells) rp.cells = &(*cells)[r];
    parts.push_back(std::move(rp));
  }
  return parts;
}

inline constexpr double kMacroCellEpsilon = 1e-3;

/// Macro-cells of every rank (16^3 per partition, 4^3 probes per cell, padded by
/// kMacroCellEpsilon of the value span, or absolutely for a constant field).
inline std::vector<MacroCellGrid> dnr_macrocells(const dist::DnrModel& dnr, int resolution = 16) {
  const auto parts = dnr_parts(dnr);
  std::vector<MacroCellGrid> out(parts.size());
  double span = 0.0;
  for (int c = 0; c < dnr.channels(); ++c) span = std::max(span, dnr.range.vmax[c] - dnr.range.vmin[c]);
  const double pad = kMacroCellEpsilon * (span > 0.0 ? span : 1.0);
  dist::parallel_for(static_cast<int>(parts.size()), [&](int r) {
    out[r] = build_macrocells(parts[r].sample, parts[r].bounds, resolution, 4, pad);
  });
  return out;
}

}  // namespace dnr::vis
