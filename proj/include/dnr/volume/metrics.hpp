#pragma once

#include "dnr/volume/grid_volume.hpp"

#include <cmath>
#include <span>

namespace dnr::volume {

/// Reported in place of +inf when two signals are identical.
inline constexpr double kPsnrCap = 200.0;

inline double psnr_from_mse(double mse) {
  if (!(mse > 0.0)) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

inline double mse(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw ConfigError("mse: length mismatch");
  if (pred.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - ref[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

/// PSNR with peak 1.0 on [0,1]-normalized values, MSE pooled over nodes and channels.
inline double psnr(std::span<const double> pred, std::span<const double> ref) { return psnr_from_mse(mse(pred, ref)); }

inline double psnr(const GridVolume& pred, const GridVolume& ref) {
  if (pred.dims() != ref.dims() || pred.channels() != ref.channels()) {
    throw ConfigError("psnr: volumes differ in dims or channels");
  }
  return psnr(pred.values(), ref.values());
}

}  // namespace dnr::volume
