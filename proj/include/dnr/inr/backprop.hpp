#pragma once

#include "dnr/inr/loss.hpp"
#include "dnr/inr/model.hpp"

namespace dnr::inr {

/// Training batch in unit coordinates. The first `uniform_count` samples are the
/// uniform term of the loss, the rest are boundary samples. Targets are sample-major.
template <typename T>
struct Batch {
  std::vector<Vec3> coords;
  std::vector<T> targets;
  std::size_t uniform_count = 0;

  std::size_t size() const { return coords.size(); }
  std::size_t boundary_count() const { return coords.size() - uniform_count; }
};

struct LossParts {
  double total = 0.0;
  double uniform = 0.0;
  double boundary = 0.0;
};

/// Batched forward / reverse-mode pass over an InrModel with reusable workspace.
/// One instance per thread.
template <typename T>
class BatchEvaluator {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using ConstMap = Eigen::Map<const Mat>;
  using ConstVecMap = Eigen::Map<const Vec>;

  /// Predictions for every coordinate, sample-major (n x D).
  void predict(const InrModel<T>& model, std::span<const Vec3> coords, std::span<T> out) {
    constexpr std::size_t kChunk = 4096;
    const int D = model.output_dim();
    for (std::size_t s = 0; s < coords.size(); s += kChunk) {
      const std::size_t n = std::min(kChunk, coords.size() - s);
      forward(model, coords.subspan(s, n), false);
      const Mat& y = acts_.back();
      for (std::size_t j = 0; j < n; ++j)
        for (int c = 0; c < D; ++c) out[(s + j) * D + c] = y(c, static_cast<Eigen::Index>(j));
    }
  }

  LossParts loss(const InrModel<T>& model, const Batch<T>& batch, double lambda) {
    forward(model, batch.coords, false);
    return loss_parts(model, batch, lambda);
  }

  /// Loss and its exact gradient with respect to every parameter (L1 subgradient 0 at 0).
  /// `grad` is overwritten.
  LossParts loss_and_gradient(const InrModel<T>& model, const Batch<T>& batch, double lambda, std::span<T> grad) {
    if (grad.size() != model.param_count()) throw ConfigError("loss_and_gradient: gradient size mismatch");
    forward(model, batch.coords, true);
    const LossParts parts = loss_parts(model, batch, lambda);

    const auto n = static_cast<Eigen::Index>(batch.size());
    const int D = model.output_dim();
    const double lam = effective_lambda(lambda, batch.boundary_count());
    const T su = batch.uniform_count ? static_cast<T>((1.0 - lam) / (double(batch.uniform_count) * D)) : T(0);
    const T sb = batch.boundary_count() ? static_cast<T>(lam / (double(batch.boundary_count()) * D)) : T(0);

    const Mat& y = acts_.back();
    Mat g(D, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const T scale = static_cast<std::size_t>(j) < batch.uniform_count ? su : sb;
      for (int c = 0; c < D; ++c) {
        const T d = y(c, j) - batch.targets[static_cast<std::size_t>(j) * D + c];
        g(c, j) = d > T(0) ? scale : (d < T(0) ? -scale : T(0));
      }
    }

    std::fill(grad.begin(), grad.end(), T(0));
    const auto& layers = model.layers();
    for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
      const auto& l = layers[li];
      const Mat& w = weights_[li];
      Eigen::Map<Mat> gw(grad.data() + l.weight_offset, l.out, l.in);
      Eigen::Map<Vec> gb(grad.data() + l.bias_offset, l.out);
      const Mat& a_in = acts_[li];
      // Results go through owned temporaries for the same alignment reason as in forward().
      gw_tmp_.noalias() = g * a_in.transpose();
      gw = gw_tmp_;
      gb_tmp_ = g.rowwise().sum();
      gb = gb_tmp_;
      Mat prev = w.transpose() * g;
      if (li > 0) prev = prev.cwiseProduct((a_in.array() > T(0)).template cast<T>().matrix());
      g = std::move(prev);
    }

    // g now holds dLoss/dFeatures; scatter-add into the tables through the stored stencils.
    const auto& enc = model.encoding();
    const int L = enc.cfg.levels;
    const int F = enc.cfg.features_per_level;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (int lv = 0; lv < L; ++lv) {
        const auto& s = stencils_[static_cast<std::size_t>(j) * L + lv];
        T* table = grad.data() + enc.offset[lv];
        for (int c = 0; c < 8; ++c) {
          T* e = table + static_cast<std::size_t>(s.index[c]) * F;
          for (int f = 0; f < F; ++f) e[f] += s.weight[c] * g(lv * F + f, j);
        }
      }
    }
    return parts;
  }

 private:
  void forward(const InrModel<T>& model, std::span<const Vec3> coords, bool keep_stencils) {
    const auto n = static_cast<Eigen::Index>(coords.size());
    const auto& enc = model.encoding();
    const int L = enc.cfg.levels;
    const int F = enc.cfg.features_per_level;
    const auto& layers = model.layers();
    acts_.resize(layers.size() + 1);
    Mat& x = acts_[0];
    x.resize(model.input_width(), n);
    if (keep_stencils) stencils_.resize(static_cast<std::size_t>(n) * L);
    const auto tables = model.tables();
    for (Eigen::Index j = 0; j < n; ++j) {
      T* col = x.col(j).data();
      for (int lv = 0; lv < L; ++lv) {
        const auto s = level_stencil<T>(enc, lv, coords[static_cast<std::size_t>(j)]);
        const T* table = tables.data() + enc.offset[lv];
        T* dst = col + lv * F;
        for (int f = 0; f < F; ++f) dst[f] = T(0);
        for (int c = 0; c < 8; ++c) {
          const T* e = table + static_cast<std::size_t>(s.index[c]) * F;
          for (int f = 0; f < F; ++f) dst[f] += s.weight[c] * e[f];
        }
        if (keep_stencils) stencils_[static_cast<std::size_t>(j) * L + lv] = s;
      }
    }
    // Weights are copied into owned (aligned) storage: with wide SIMD, Eigen's kernels peel by
    // pointer alignment, and mapping the flat buffer directly makes results depend on the heap.
    const T* p = model.params().data();
    weights_.resize(layers.size());
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const auto& l = layers[li];
      weights_[li] = ConstMap(p + l.weight_offset, l.out, l.in);
      ConstVecMap b(p + l.bias_offset, l.out);
      Mat& z = acts_[li + 1];
      z.noalias() = weights_[li] * acts_[li];
      z.colwise() += b;
      if (li + 1 < layers.size()) z = z.cwiseMax(T(0));
    }
  }

  LossParts loss_parts(const InrModel<T>& model, const Batch<T>& batch, double lambda) const {
    if (batch.targets.size() != batch.size() * static_cast<std::size_t>(model.output_dim())) {
      throw ConfigError("batch: target count does not match coords x output_dim");
    }
    if (batch.uniform_count > batch.size()) throw ConfigError("batch: uniform_count exceeds batch size");
    const Mat& y = acts_.back();
    const int D = model.output_dim();
    double su = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      double acc = 0.0;
      for (int c = 0; c < D; ++c) {
        acc += std::abs(static_cast<double>(y(c, static_cast<Eigen::Index>(j))) -
                        static_cast<double>(batch.targets[j * D + c]));
      }
      (j < batch.uniform_count ? su : sb) += acc;
    }
    LossParts out;
    out.uniform = batch.uniform_count ? su / (double(batch.uniform_count) * D) : 0.0;
    out.boundary = batch.boundary_count() ? sb / (double(batch.boundary_count()) * D) : 0.0;
    const double lam = effective_lambda(lambda, batch.boundary_count());
    out.total = (1.0 - lam) * out.uniform + lam * out.boundary;
    return out;
  }

  std::vector<Mat> acts_;
  std::vector<Mat> weights_;
  Mat gw_tmp_;
  Vec gb_tmp_;
  std::vector<LevelStencil<T>> stencils_;
};

}  // namespace dnr::inr
