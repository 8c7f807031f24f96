#pragma once

#include "dnr/common.hpp"

#include <cmath>
#include <span>

namespace dnr::inr {

/// Mean absolute error; 0 for empty inputs.
inline double l1(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw ConfigError("l1: length mismatch");
  if (pred.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - ref[i]);
  return acc / static_cast<double>(pred.size());
}

/// Boundary weight actually applied: lambda, or 0 when there are no boundary samples.
inline double effective_lambda(double lambda, std::size_t boundary_count) { return boundary_count == 0 ? 0.0 : lambda; }

/// (1 - lambda) * L1(uniform) + lambda * L1(boundary).
inline double loss_total(std::span<const double> pred_u, std::span<const double> ref_u,
                         std::span<const double> pred_b, std::span<const double> ref_b, double lambda) {
  if (pred_b.size() != ref_b.size()) throw ConfigError("loss_total: boundary length mismatch");
  const double lam = effective_lambda(lambda, pred_b.size());
  return (1.0 - lam) * l1(pred_u, ref_u) + lam * l1(pred_b, ref_b);
}

}  // namespace dnr::inr
