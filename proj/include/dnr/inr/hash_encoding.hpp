#pragma once

#include "dnr/inr/config.hpp"

#include <span>
#include <vector>

namespace dnr::inr {

/// Grid resolution of level l: floor(N_min * b^l).
inline int level_resolution(const EncodingConfig& cfg, int level) {
  if (level < 0 || level >= cfg.levels) {
    throw ConfigError("level_resolution: level " + std::to_string(level) + " out of range");
  }
  return static_cast<int>(std::floor(cfg.base_resolution * std::pow(cfg.per_level_scale, level)));
}

/// (N+1)^3 vertices, saturating at uint64 max.
inline std::uint64_t level_vertex_count(int resolution) {
  const std::uint64_t n = static_cast<std::uint64_t>(resolution) + 1;
  return n * n * n;
}

/// True when the level indexes its table densely instead of hashing.
inline bool level_is_dense(const EncodingConfig& cfg, int level) {
  return level_vertex_count(level_resolution(cfg, level)) <= cfg.table_size;
}

/// Entry count of level l's table: min(T, (N_l + 1)^3).
inline std::uint32_t level_entries(const EncodingConfig& cfg, int level) {
  const std::uint64_t v = level_vertex_count(level_resolution(cfg, level));
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(v, cfg.table_size));
}

/// Spatial hash: XOR of per-axis products with (1, 2654435761, 805459861), modulo the table size.
inline std::uint32_t spatial_hash(std::uint32_t x, std::uint32_t y, std::uint32_t z, std::uint32_t table_size) {
  constexpr std::uint32_t kPrime1 = 2654435761u;
  constexpr std::uint32_t kPrime2 = 805459861u;
  return (x ^ (y * kPrime1) ^ (z * kPrime2)) & (table_size - 1);
}

/// Static description of all level tables inside a flat parameter buffer.
struct EncodingLayout {
  EncodingConfig cfg;
  std::vector<int> resolution;
  std::vector<std::uint32_t> entries;
  std::vector<bool> dense;
  std::vector<std::size_t> offset;  // first parameter of each level (entries * F per level)
  std::size_t param_count = 0;

  explicit EncodingLayout(const EncodingConfig& c = {}) : cfg(c) {
    cfg.validate();
    for (int l = 0; l < cfg.levels; ++l) {
      resolution.push_back(level_resolution(cfg, l));
      entries.push_back(level_entries(cfg, l));
      dense.push_back(level_is_dense(cfg, l));
      offset.push_back(param_count);
      param_count += static_cast<std::size_t>(entries.back()) * cfg.features_per_level;
    }
  }

  std::uint32_t vertex_index(int level, std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    if (dense[level]) {
      const std::uint32_t n = static_cast<std::uint32_t>(resolution[level]) + 1;
      return x + n * (y + n * z);
    }
    return spatial_hash(x, y, z, cfg.table_size);
  }
};

/// Table entries and trilinear weights touched by one coordinate on one level.
template <typename T>
struct LevelStencil {
  std::uint32_t index[8];
  T weight[8];
};

/// Computes the 8-corner stencil of unit coordinate x (clamped to [0,1]^3) on `level`.
template <typename T>
inline LevelStencil<T> level_stencil(const EncodingLayout& layout, int level, const Vec3& x) {
  const int n = layout.resolution[level];
  std::uint32_t base[3];
  T frac[3];
  for (int a = 0; a < 3; ++a) {
    const double pos = std::clamp(x[a], 0.0, 1.0) * n;
    int i = static_cast<int>(std::floor(pos));
    i = std::clamp(i, 0, n - 1);
    base[a] = static_cast<std::uint32_t>(i);
    frac[a] = static_cast<T>(pos - i);
  }
  LevelStencil<T> s;
  for (int c = 0; c < 8; ++c) {
    const std::uint32_t dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    s.index[c] = layout.vertex_index(level, base[0] + dx, base[1] + dy, base[2] + dz);
    s.weight[c] = (dx ? frac[0] : T(1) - frac[0]) * (dy ? frac[1] : T(1) - frac[1]) * (dz ? frac[2] : T(1) - frac[2]);
  }
  return s;
}

/// Writes the L*F feature vector for x. `tables` is the flat encoding parameter block.
template <typename T>
inline void encode_features(const EncodingLayout& layout, std::span<const T> tables, const Vec3& x, std::span<T> out) {
  const int F = layout.cfg.features_per_level;
  for (int l = 0; l < layout.cfg.levels; ++l) {
    const auto s = level_stencil<T>(layout, l, x);
    const T* table = tables.data() + layout.offset[l];
    T* dst = out.data() + static_cast<std::size_t>(l) * F;
    for (int f = 0; f < F; ++f) dst[f] = T(0);
    for (int c = 0; c < 8; ++c) {
      const T* e = table + static_cast<std::size_t>(s.index[c]) * F;
      for (int f = 0; f < F; ++f) dst[f] += s.weight[c] * e[f];
    }
  }
}

}  // namespace dnr::inr
