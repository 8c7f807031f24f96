#pragma once

#include "dnr/common.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace dnr::inr {

/// Multi-resolution hash grid settings.
struct EncodingConfig {
  int levels = 16;
  int features_per_level = 4;
  std::uint32_t table_size = 1u << 19;
  int base_resolution = 4;
  double per_level_scale = 2.0;

  int output_width() const { return levels * features_per_level; }

  void validate() const {
    if (levels < 1) throw ConfigError("encoding: levels must be >= 1");
    if (features_per_level < 1) throw ConfigError("encoding: features_per_level must be >= 1");
    if (table_size == 0 || (table_size & (table_size - 1)) != 0) {
      throw ConfigError("encoding: table_size must be a power of two");
    }
    if (base_resolution < 1) throw ConfigError("encoding: base_resolution must be >= 1");
    if (!(per_level_scale > 1.0)) throw ConfigError("encoding: per_level_scale must be > 1");
  }
};

struct MlpConfig {
  int hidden_layers = 4;
  int neurons = 64;
  int output_dim = 1;

  void validate() const {
    if (hidden_layers < 1) throw ConfigError("mlp: hidden_layers must be >= 1");
    if (neurons < 1) throw ConfigError("mlp: neurons must be >= 1");
    if (output_dim < 1) throw ConfigError("mlp: output_dim must be >= 1");
  }
};

struct TrainConfig {
  double lambda = 0.5;
  int uniform_batch = 16384;
  int boundary_batch = 4096;
  double lr0 = 1e-2;
  double lr_decay = 0.8;
  int lr_decay_interval = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double target_psnr = std::numeric_limits<double>::infinity();
  int max_steps = 10000;
  int psnr_check_interval = 100;
  int probe_resolution = 32;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("train: lambda must lie in [0,1]");
    if (uniform_batch < 1 || boundary_batch < 1) throw ConfigError("train: batch sizes must be >= 1");
    if (max_steps < 1) throw ConfigError("train: max_steps must be >= 1");
    if (psnr_check_interval < 1) throw ConfigError("train: psnr_check_interval must be >= 1");
    if (lr_decay_interval < 1) throw ConfigError("train: lr_decay_interval must be >= 1");
    if (probe_resolution < 1) throw ConfigError("train: probe_resolution must be >= 1");
  }
};

/// Full model + training configuration.
struct Profile {
  std::string name;
  EncodingConfig encoding;
  MlpConfig mlp;
  TrainConfig train;
};

/// Published configuration: 16 levels x 4 features, 2^19 tables, 4 x 64 ReLU MLP.
inline Profile paper_profile(int output_dim = 1) {
  Profile p;
  p.name = "paper";
  p.mlp.output_dim = output_dim;
  return p;
}

/// Scaled-down configuration for CPU runs and tests.
inline Profile desk_profile(int output_dim = 1) {
  Profile p;
  p.name = "desk";
  p.encoding.levels = 8;
  p.encoding.features_per_level = 2;
  p.encoding.table_size = 1u << 14;
  p.encoding.base_resolution = 4;
  p.encoding.per_level_scale = 1.5;
  p.mlp.hidden_layers = 2;
  p.mlp.neurons = 32;
  p.mlp.output_dim = output_dim;
  p.train.uniform_batch = 2048;
  p.train.boundary_batch = 512;
  p.train.max_steps = 2000;
  p.train.psnr_check_interval = 50;
  return p;
}

inline Profile profile_by_name(const std::string& name, int output_dim = 1) {
  if (name == "desk") return desk_profile(output_dim);
  if (name == "paper") return paper_profile(output_dim);
  throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
}

/// Step-decayed learning rate: lr0 * decay^floor(step / interval).
inline double lr_at(const TrainConfig& cfg, long step) {
  if (step < 0) throw ConfigError("lr_at: step must be non-negative");
  return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(step / cfg.lr_decay_interval));
}

}  // namespace dnr::inr
