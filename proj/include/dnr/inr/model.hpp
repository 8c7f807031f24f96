#pragma once

#include "dnr/inr/hash_encoding.hpp"

#include <Eigen/Dense>

#include <random>

namespace dnr::inr {

/// Hash-grid encoding followed by a ReLU MLP with a linear output layer:
/// maps a unit-cube coordinate to D normalized field values.
///
/// All trainable parameters live in one flat buffer: encoding tables level by level,
/// then for each linear layer its weight matrix (column-major, out x in) and bias.
template <typename T>
class InrModel {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  InrModel() : InrModel(EncodingConfig{}, MlpConfig{}) {}

  InrModel(const EncodingConfig& enc, const MlpConfig& mlp) : encoding_(enc), mlp_(mlp) {
    mlp_.validate();
    std::size_t off = encoding_.param_count;
    int in = encoding_.cfg.output_width();
    for (int l = 0; l <= mlp_.hidden_layers; ++l) {
      const int out = l == mlp_.hidden_layers ? mlp_.output_dim : mlp_.neurons;
      Layer layer{in, out, off, off + static_cast<std::size_t>(in) * out};
      off = layer.bias_offset + out;
      layers_.push_back(layer);
      in = out;
    }
    params_.assign(off, T(0));
  }

  const EncodingLayout& encoding() const { return encoding_; }
  const EncodingConfig& encoding_config() const { return encoding_.cfg; }
  const MlpConfig& mlp_config() const { return mlp_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int input_width() const { return encoding_.cfg.output_width(); }
  int output_dim() const { return mlp_.output_dim; }

  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  std::size_t encoding_param_count() const { return encoding_.param_count; }
  std::span<const T> tables() const { return {params_.data(), encoding_.param_count}; }

  /// Size of the parameters when stored as float32.
  std::size_t byte_size() const { return params_.size() * sizeof(float); }

  /// Tables uniform in [-1e-4, 1e-4]; weights uniform in +-sqrt(6 / fan_in); biases zero.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> table_dist(-1e-4, 1e-4);
    for (std::size_t i = 0; i < encoding_.param_count; ++i) params_[i] = static_cast<T>(table_dist(rng));
    for (const Layer& l : layers_) {
      const double bound = std::sqrt(6.0 / l.in);
      std::uniform_real_distribution<double> w(-bound, bound);
      for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i) {
        params_[l.weight_offset + i] = static_cast<T>(w(rng));
      }
      std::fill_n(params_.begin() + l.bias_offset, l.out, T(0));
    }
  }

  void encode(const Vec3& x, std::span<T> features) const {
    encode_features<T>(encoding_, tables(), x, features);
  }

  /// MLP applied to one feature vector.
  void mlp_forward(std::span<const T> features, std::span<T> out) const {
    if (static_cast<int>(features.size()) != input_width()) throw ConfigError("mlp_forward: feature width mismatch");
    if (static_cast<int>(out.size()) != output_dim()) throw ConfigError("mlp_forward: output width mismatch");
    thread_local std::vector<T> a, b;
    a.assign(features.begin(), features.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Layer& l = layers_[li];
      b.assign(params_.begin() + l.bias_offset, params_.begin() + l.bias_offset + l.out);
      const T* w = params_.data() + l.weight_offset;
      for (int c = 0; c < l.in; ++c) {
        const T xc = a[c];
        const T* col = w + static_cast<std::size_t>(c) * l.out;
        for (int r = 0; r < l.out; ++r) b[r] += col[r] * xc;
      }
      if (li + 1 < layers_.size()) {
        for (T& v : b) v = v > T(0) ? v : T(0);
      }
      std::swap(a, b);
    }
    std::copy(a.begin(), a.end(), out.begin());
  }

  /// Phi(x): encode then MLP. Deterministic and safe to call concurrently.
  void forward(const Vec3& x, std::span<T> out) const {
    thread_local std::vector<T> feat;
    feat.resize(input_width());
    encode(x, feat);
    mlp_forward(feat, out);
  }

  std::vector<T> forward(const Vec3& x) const {
    std::vector<T> out(output_dim());
    forward(x, out);
    return out;
  }

  template <typename U>
  InrModel<U> cast() const {
    InrModel<U> m(encoding_.cfg, mlp_);
    auto dst = m.params();
    for (std::size_t i = 0; i < params_.size(); ++i) dst[i] = static_cast<U>(params_[i]);
    return m;
  }

  friend bool operator==(const InrModel& a, const InrModel& b) { return a.params_ == b.params_; }

 private:
  EncodingLayout encoding_;
  MlpConfig mlp_;
  std::vector<Layer> layers_;
  std::vector<T> params_;
};

}  // namespace dnr::inr
