#pragma once

#include "dnr/inr/config.hpp"

#include <span>
#include <vector>

namespace dnr::inr {

/// First/second moment buffers and step counter of Adam.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double b1, double b2, double eps)
      : m(n, T(0)), v(n, T(0)), beta1(b1), beta2(b2), epsilon(eps) {}

  static AdamState from(const TrainConfig& cfg, std::size_t n) { return {n, cfg.beta1, cfg.beta2, cfg.epsilon}; }
};

/// One bias-corrected Adam update of `params` in place.
template <typename T>
void adam_step(AdamState<T>& state, std::span<T> params, std::span<const T> grad, double lr) {
  if (params.size() != grad.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ConfigError("adam_step: parameter/gradient/state shape mismatch");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T step = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(state.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grad[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    params[i] -= step * state.m[i] / (std::sqrt(state.v[i] * inv_c2) + eps);
  }
}

}  // namespace dnr::inr
