#pragma once

#include "dnr/inr/adam.hpp"
#include "dnr/inr/backprop.hpp"
#include "dnr/timing.hpp"
#include "dnr/volume/metrics.hpp"

#include <functional>
#include <optional>

namespace dnr::inr {

/// Raised when the loss becomes non-finite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What one network is fitted to. Coordinates are unit coordinates of the partition;
/// values are normalized to [0,1].
struct TrainingTask {
  int channels = 1;
  /// Reference value oracle. Must accept any point of `uniform_box` and of the boundary faces.
  std::function<void(const Vec3& unit, std::span<double> out)> target;
  /// Region for uniform samples; may extend past the unit cube (ghost margin).
  Box3 uniform_box{Vec3::Zero(), Vec3::Ones()};
  /// Shared-face rectangles for boundary samples (degenerate along the face axis).
  std::vector<Box3> boundary;
  /// Points and reference values for the final full-grid PSNR. Empty: the probe lattice is used.
  std::vector<Vec3> eval_points;
  std::vector<double> eval_values;
};

enum class StopReason { TargetReached, BudgetExhausted };

inline const char* to_string(StopReason r) {
  return r == StopReason::TargetReached ? "target-reached" : "budget-exhausted";
}

struct LossRecord {
  int step = 0;
  double total = 0.0;
  double uniform = 0.0;
  double boundary = 0.0;
  double probe_psnr = 0.0;
};

struct TrainReport {
  int steps_taken = 0;
  double final_uniform_l1 = 0.0;
  double final_boundary_l1 = 0.0;
  double probe_psnr = 0.0;
  double achieved_psnr = 0.0;  // full evaluation set
  double wall_seconds = 0.0;
  double cpu_seconds = 0.0;
  StopReason stop = StopReason::BudgetExhausted;
  std::vector<LossRecord> history;
};

template <typename T>
struct TrainResult {
  InrModel<T> model;
  TrainReport report;
};

/// Cell-centred R^3 lattice over the unit cube; disjoint from the grid nodes used for the final PSNR.
inline std::vector<Vec3> probe_lattice(int resolution) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(resolution) * resolution * resolution);
  for (int k = 0; k < resolution; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i)
        pts.emplace_back((i + 0.5) / resolution, (j + 0.5) / resolution, (k + 0.5) / resolution);
  return pts;
}

template <typename T>
double model_psnr(BatchEvaluator<T>& eval, const InrModel<T>& model, std::span<const Vec3> pts,
                  std::span<const double> ref) {
  std::vector<T> pred(ref.size());
  eval.predict(model, pts, pred);
  std::vector<double> p(pred.begin(), pred.end());
  return volume::psnr(p, ref);
}

/// Draws one batch: `uniform_batch` points in the uniform box and, when faces exist,
/// `boundary_batch` points on randomly chosen faces.
template <typename T>
void draw_batch(const TrainingTask& task, const TrainConfig& cfg, std::mt19937_64& rng, Batch<T>& batch) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int D = task.channels;
  const std::size_t nu = static_cast<std::size_t>(cfg.uniform_batch);
  const std::size_t nb = task.boundary.empty() ? 0 : static_cast<std::size_t>(cfg.boundary_batch);
  batch.coords.resize(nu + nb);
  batch.targets.resize((nu + nb) * D);
  batch.uniform_count = nu;
  thread_local std::vector<double> value;
  value.resize(D);
  auto fill = [&](std::size_t j, const Box3& box) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = box.lo[a] + u01(rng) * (box.hi[a] - box.lo[a]);
    batch.coords[j] = p;
    task.target(p, value);
    for (int c = 0; c < D; ++c) batch.targets[j * D + c] = static_cast<T>(value[c]);
  };
  for (std::size_t j = 0; j < nu; ++j) fill(j, task.uniform_box);
  if (nb) {
    std::uniform_int_distribution<std::size_t> pick(0, task.boundary.size() - 1);
    for (std::size_t j = nu; j < nu + nb; ++j) fill(j, task.boundary[pick(rng)]);
  }
}

/// Fits one network: uniform + boundary batches, boundary-weighted L1 loss, Adam with step decay,
/// until the probe PSNR and then the full-set PSNR reach the target, or max_steps.
template <typename T>
TrainResult<T> train(const TrainingTask& task, const EncodingConfig& enc, MlpConfig mlp, const TrainConfig& cfg) {
  cfg.validate();
  if (!task.target) throw ConfigError("train: task has no target oracle");
  if (task.channels < 1) throw ConfigError("train: channels must be >= 1");
  mlp.output_dim = task.channels;
  Stopwatch wall;
  const double cpu0 = thread_cpu_seconds();

  TrainResult<T> res{InrModel<T>(enc, mlp), {}};
  InrModel<T>& model = res.model;
  TrainReport& rep = res.report;
  model.initialize(cfg.seed ^ 0x5DEECE66DULL);
  auto adam = AdamState<T>::from(cfg, model.param_count());
  std::vector<T> grad(model.param_count());
  std::mt19937_64 rng(cfg.seed);
  BatchEvaluator<T> eval;
  Batch<T> batch;

  const int D = task.channels;
  const auto probes = probe_lattice(cfg.probe_resolution);
  std::vector<double> probe_ref(probes.size() * D);
  for (std::size_t i = 0; i < probes.size(); ++i) task.target(probes[i], std::span<double>(&probe_ref[i * D], D));
  const bool has_eval = !task.eval_points.empty();
  if (has_eval && task.eval_values.size() != task.eval_points.size() * D) {
    throw ConfigError("train: eval_values size does not match eval_points x channels");
  }
  auto full_psnr = [&] {
    return has_eval ? model_psnr(eval, model, task.eval_points, task.eval_values)
                    : model_psnr(eval, model, probes, probe_ref);
  };

  std::optional<double> full;
  for (int step = 0; step < cfg.max_steps; ++step) {
    draw_batch(task, cfg, rng, batch);
    const LossParts lp = eval.loss_and_gradient(model, batch, cfg.lambda, grad);
    if (!std::isfinite(lp.total)) {
      throw TrainingError("non-finite loss at step " + std::to_string(step) +
                          " (uniform L1 " + std::to_string(lp.uniform) + ", boundary L1 " +
                          std::to_string(lp.boundary) + ")");
    }
    adam_step<T>(adam, model.params(), grad, lr_at(cfg, step));
    rep.steps_taken = step + 1;
    rep.final_uniform_l1 = lp.uniform;
    rep.final_boundary_l1 = lp.boundary;

    const bool last = rep.steps_taken == cfg.max_steps;
    if (rep.steps_taken % cfg.psnr_check_interval == 0 || last) {
      rep.probe_psnr = model_psnr(eval, model, probes, probe_ref);
      rep.history.push_back({rep.steps_taken, lp.total, lp.uniform, lp.boundary, rep.probe_psnr});
      if (rep.probe_psnr >= cfg.target_psnr) {
        full = full_psnr();
        if (*full >= cfg.target_psnr) {
          rep.stop = StopReason::TargetReached;
          break;
        }
      } else {
        full.reset();
      }
      if (last) break;
    } else {
      full.reset();
    }
  }
  rep.achieved_psnr = full ? *full : full_psnr();
  if (rep.achieved_psnr >= cfg.target_psnr) rep.stop = StopReason::TargetReached;
  rep.wall_seconds = wall.seconds();
  rep.cpu_seconds = thread_cpu_seconds() - cpu0;
  return res;
}

}  // namespace dnr::inr
