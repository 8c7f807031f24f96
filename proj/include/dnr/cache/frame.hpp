#pragma once

#include "dnr/dist/dnr_model.hpp"

#include <memory>

namespace dnr::cache {

/// One cached timestep. Frames are immutable once built.
class Frame {
 public:
  Frame(int step, double time) : step_(step), time_(time) {}
  virtual ~Frame() = default;

  int step() const { return step_; }
  double time() const { return time_; }
  virtual int channels() const = 0;
  virtual Box3 bounds() const = 0;
  /// Bytes the cache holds for this frame.
  virtual std::size_t bytes() const = 0;
  virtual volume::GridVolume decode() const = 0;
  /// Denormalized value at a physical point.
  virtual void query(const Vec3& p, std::span<double> out) const = 0;

 private:
  int step_;
  double time_;
};

using FramePtr = std::shared_ptr<const Frame>;

/// Frozen DNR snapshot of one timestep; the source grid is not retained.
class NeuralVolume : public Frame {
 public:
  NeuralVolume(std::shared_ptr<const dist::DnrModel> model, int step, double time)
      : Frame(step, time), model_(std::move(model)) {
    if (!model_) throw ConfigError("NeuralVolume: null model");
  }

  const dist::DnrModel& model() const { return *model_; }
  double achieved_psnr() const { return model_->global_psnr; }
  bool budget_exhausted() const { return !model_->target_reached(); }

  int channels() const override { return model_->channels(); }
  Box3 bounds() const override { return model_->bounds(); }
  std::size_t bytes() const override { return model_->param_bytes(); }
  volume::GridVolume decode() const override { return dist::decode_global(*model_); }
  void query(const Vec3& p, std::span<double> out) const override { model_->query(p, out); }

 private:
  std::shared_ptr<const dist::DnrModel> model_;
};

/// Uncompressed grid snapshot, used as the raw baseline in memory comparisons.
class RawFrame : public Frame {
 public:
  RawFrame(std::shared_ptr<const volume::GridVolume> grid, int step, double time)
      : Frame(step, time), grid_(std::move(grid)) {
    if (!grid_) throw ConfigError("RawFrame: null grid");
  }

  const volume::GridVolume& grid() const { return *grid_; }

  int channels() const override { return grid_->channels(); }
  Box3 bounds() const override { return grid_->bounds(); }
  std::size_t bytes() const override { return grid_->values().size() * sizeof(double); }
  volume::GridVolume decode() const override { return *grid_; }
  void query(const Vec3& p, std::span<double> out) const override { volume::sample_trilinear(*grid_, p, out); }

 private:
  std::shared_ptr<const volume::GridVolume> grid_;
};

}  // namespace dnr::cache
