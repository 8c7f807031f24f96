#pragma once

#include "dnr/volume/grid_volume.hpp"

#include <limits>
#include <vector>

namespace dnr::volume {

/// Per-channel global value range shared by every partition.
struct ValueRange {
  std::vector<double> vmin;
  std::vector<double> vmax;

  int channels() const { return static_cast<int>(vmin.size()); }

  static ValueRange empty(int channels) {
    return {std::vector<double>(channels, std::numeric_limits<double>::infinity()),
            std::vector<double>(channels, -std::numeric_limits<double>::infinity())};
  }

  void merge(const ValueRange& o) {
    if (o.channels() != channels()) throw ConfigError("ValueRange::merge: channel mismatch");
    for (int c = 0; c < channels(); ++c) {
      vmin[c] = std::min(vmin[c], o.vmin[c]);
      vmax[c] = std::max(vmax[c], o.vmax[c]);
    }
  }

  bool degenerate(int c) const { return !(vmax[c] > vmin[c]); }

  double normalize(double v, int c) const { return degenerate(c) ? 0.0 : (v - vmin[c]) / (vmax[c] - vmin[c]); }
  double denormalize(double u, int c) const { return degenerate(c) ? vmin[c] : vmin[c] + u * (vmax[c] - vmin[c]); }

  friend bool operator==(const ValueRange&, const ValueRange&) = default;
};

/// Min/max over all nodes of `vol`.
inline ValueRange compute_range(const GridVolume& vol) {
  ValueRange r = ValueRange::empty(vol.channels());
  const auto v = vol.values();
  const int ch = vol.channels();
  for (std::size_t n = 0; n < vol.node_count(); ++n)
    for (int c = 0; c < ch; ++c) {
      r.vmin[c] = std::min(r.vmin[c], v[n * ch + c]);
      r.vmax[c] = std::max(r.vmax[c], v[n * ch + c]);
    }
  return r;
}

inline ValueRange compute_range(const GridVolume& vol, const IndexBox& box) { return compute_range(vol.subvolume(box)); }

struct NormalizedVolume {
  GridVolume volume;
  /// Channels whose range collapsed (vmax == vmin); those outputs are all zero.
  std::vector<int> constant_channels;
};

/// v' = (v - vmin) / (vmax - vmin) per channel.
inline NormalizedVolume normalize_values(const GridVolume& vol, const ValueRange& range) {
  if (range.channels() != vol.channels()) throw ConfigError("normalize_values: range/volume channel mismatch");
  NormalizedVolume out{vol, {}};
  for (int c = 0; c < range.channels(); ++c) {
    if (range.vmax[c] < range.vmin[c]) throw ConfigError("normalize_values: vmax < vmin");
    if (range.degenerate(c)) out.constant_channels.push_back(c);
  }
  auto v = out.volume.values();
  const int ch = vol.channels();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = range.normalize(v[i], static_cast<int>(i % ch));
  return out;
}

inline GridVolume denormalize_values(const GridVolume& vol, const ValueRange& range) {
  if (range.channels() != vol.channels()) throw ConfigError("denormalize_values: range/volume channel mismatch");
  GridVolume out = vol;
  auto v = out.values();
  const int ch = vol.channels();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = range.denormalize(v[i], static_cast<int>(i % ch));
  return out;
}

}  // namespace dnr::volume
