#pragma once

#include "dnr/dist/train_distributed.hpp"
#include "dnr/drivers.hpp"
#include "dnr/timing.hpp"

namespace dnr::bench {

struct BenchOptions {
  std::string profile = "desk";
  double target_psnr = 40.0;
  int max_steps = 2000;
  int base_dims = 16;  // nodes per rank per axis (weak) or per axis of the whole field (strong: x2)
  std::uint64_t seed = 1;
  int seeds = 3;  // scaling rows average over this many field and training seeds
  int repeats = 5;
};

inline std::vector<Index3> scaling_layouts() { return {{1, 1, 1}, {2, 1, 1}, {2, 2, 1}, {2, 2, 2}}; }

inline dist::DistributedConfig bench_config(const BenchOptions& o, const Index3& grid) {
  const auto prof = inr::profile_by_name(o.profile);
  dist::DistributedConfig cfg;
  cfg.rank_grid = grid;
  cfg.encoding = prof.encoding;
  cfg.mlp = prof.mlp;
  cfg.train = prof.train;
  cfg.train.target_psnr = o.target_psnr;
  cfg.train.max_steps = o.max_steps;
  cfg.train.seed = o.seed;
  return cfg;
}

/// The fixed physical event every suite compresses: a blob field sampled at the given resolution.
inline volume::GridVolume bench_field(const Index3& dims, std::uint64_t seed) {
  drivers::GaussianBlobs::Params p;
  p.dims = dims;
  p.seed = seed;
  return drivers::GaussianBlobs(p).field(1);
}

struct ScalingRow {
  int ranks = 1;
  Index3 dims{};
  double mean_steps = 0.0;
  int max_steps = 0;
  double wall_seconds = 0.0;
  double min_psnr = 0.0;
  bool all_reached = false;
};

/// Trains every seed's field on `grid` and averages per-rank steps over seeds and ranks.
inline ScalingRow scaling_row(const Index3& dims, const BenchOptions& o, const Index3& grid) {
  ScalingRow row;
  row.dims = dims;
  row.min_psnr = std::numeric_limits<double>::infinity();
  row.all_reached = true;
  int runs = 0;
  for (int k = 0; k < o.seeds; ++k) {
    BenchOptions so = o;
    so.seed = o.seed + static_cast<std::uint64_t>(k);
    const auto field = bench_field(dims, so.seed);
    Stopwatch sw;
    const auto res = dist::train_distributed(field, bench_config(so, grid));
    row.wall_seconds += sw.seconds() / o.seeds;
    row.ranks = res.model.decomposition.size();
    for (const auto& r : res.model.ranks) {
      row.mean_steps += r.steps_taken;
      row.max_steps = std::max(row.max_steps, r.steps_taken);
      row.min_psnr = std::min(row.min_psnr, r.achieved_psnr);
      ++runs;
    }
    row.all_reached = row.all_reached && res.model.target_reached();
  }
  row.mean_steps /= runs;
  return row;
}

/// Ranks grow with proportional dims; each rank always holds base_dims^3 nodes of the same event.
inline std::vector<ScalingRow> weak_scaling(const BenchOptions& o) {
  std::vector<ScalingRow> rows;
  for (const auto& g : scaling_layouts())
    rows.push_back(scaling_row({o.base_dims * g[0], o.base_dims * g[1], o.base_dims * g[2]}, o, g));
  return rows;
}

/// Fixed dims (2 * base_dims per axis), growing rank count.
inline std::vector<ScalingRow> strong_scaling(const BenchOptions& o) {
  const int n = 2 * o.base_dims;
  std::vector<ScalingRow> rows;
  for (const auto& g : scaling_layouts()) rows.push_back(scaling_row({n, n, n}, o, g));
  return rows;
}

struct StabilityResult {
  std::vector<double> seconds_per_step;
  double mean = 0.0;
  double cov = 0.0;
};

/// Repeats a fixed-budget compression of one field and reports the spread of per-step time.
inline StabilityResult compress_stability(const BenchOptions& o, int budget = 300) {
  const int n = 2 * o.base_dims;
  const auto field = bench_field({n, n, n}, o.seed);
  BenchOptions fixed = o;
  fixed.target_psnr = std::numeric_limits<double>::infinity();
  fixed.max_steps = budget;
  StabilityResult r;
  for (int i = 0; i < o.repeats; ++i) {
    const auto res = dist::train_distributed(field, bench_config(fixed, {1, 1, 1}));
    const auto& rec = res.model.ranks[0];
    r.seconds_per_step.push_back(rec.wall_seconds / std::max(1, rec.steps_taken));
  }
  for (double s : r.seconds_per_step) r.mean += s;
  r.mean /= r.seconds_per_step.size();
  double var = 0.0;
  for (double s : r.seconds_per_step) var += (s - r.mean) * (s - r.mean);
  r.cov = r.seconds_per_step.size() > 1 ? std::sqrt(var / (r.seconds_per_step.size() - 1)) / r.mean : 0.0;
  return r;
}

inline nlohmann::json to_json(const ScalingRow& r) {
  return {{"ranks", r.ranks},         {"dims", r.dims},       {"mean_steps", r.mean_steps},
          {"max_steps", r.max_steps}, {"wall_seconds", r.wall_seconds}, {"min_psnr", r.min_psnr},
          {"all_reached", r.all_reached}};
}

}  // namespace dnr::bench
