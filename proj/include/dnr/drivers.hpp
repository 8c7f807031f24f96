#pragma once

#include "dnr/volume/io.hpp"

#include <json.hpp>

#include <memory>
#include <numbers>
#include <random>

namespace dnr::drivers {

/// Stand-in for a running simulation: produces the field of step s (s >= 1) at time s * dt.
class Driver {
 public:
  virtual ~Driver() = default;
  virtual std::string kind() const = 0;
  virtual int channels() const = 0;
  virtual Index3 dims() const = 0;
  virtual double dt() const = 0;
  virtual volume::GridVolume field(int step) const = 0;
  double time(int step) const { return step * dt(); }
};

/// Moving 3D Gaussians on the unit cube; centres drift and reflect off the walls.
class GaussianBlobs : public Driver {
 public:
  struct Params {
    Index3 dims{32, 32, 32};
    double dt = 0.01;
    int blobs = 4;
    double sigma_min = 0.10;
    double sigma_max = 0.20;
    double speed = 0.3;
    std::uint64_t seed = 1;
  };

  struct Blob {
    Vec3 center;
    Vec3 velocity;
    double sigma;
    double amplitude;
  };

  explicit GaussianBlobs(Params p) : p_(p) {
    std::mt19937_64 rng(p_.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < p_.blobs; ++k) {
      Blob b;
      for (int a = 0; a < 3; ++a) b.center[a] = 0.2 + 0.6 * u(rng);
      Vec3 dir(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
      b.velocity = dir.normalized() * p_.speed;
      b.sigma = p_.sigma_min + (p_.sigma_max - p_.sigma_min) * u(rng);
      b.amplitude = 0.5 + 0.5 * u(rng);
      blobs_.push_back(b);
    }
  }

  std::string kind() const override { return "gaussian-blobs"; }
  int channels() const override { return 1; }
  Index3 dims() const override { return p_.dims; }
  double dt() const override { return p_.dt; }
  const Params& params() const { return p_; }

  static double reflect(double x) {
    double r = std::fmod(x, 2.0);
    if (r < 0) r += 2.0;
    return r <= 1.0 ? r : 2.0 - r;
  }

  Vec3 center(int k, double t) const {
    const Blob& b = blobs_[k];
    Vec3 c;
    for (int a = 0; a < 3; ++a) c[a] = reflect(b.center[a] + b.velocity[a] * t);
    return c;
  }

  double value(const Vec3& x, double t) const {
    double v = 0.0;
    for (int k = 0; k < static_cast<int>(blobs_.size()); ++k) {
      const double r2 = (x - center(k, t)).squaredNorm();
      v += blobs_[k].amplitude * std::exp(-r2 / (2.0 * blobs_[k].sigma * blobs_[k].sigma));
    }
    return v;
  }

  volume::GridVolume field_at_time(double t) const {
    return volume::GridVolume::from_function(p_.dims, volume::unit_cube_mesh(p_.dims), 1,
                                             [&](const Vec3& x, std::span<double> out) { out[0] = value(x, t); });
  }

  volume::GridVolume field(int step) const override { return field_at_time(time(step)); }

 private:
  Params p_;
  std::vector<Blob> blobs_;
};

/// Decaying Taylor-Green vortex on [0, 2pi]^3:
/// u = sin x cos y cos z, v = -cos x sin y cos z, w = 0, all scaled by exp(-2 nu t).
class TaylorGreen : public Driver {
 public:
  struct Params {
    Index3 dims{32, 32, 32};
    double dt = 0.05;
    double nu = 0.05;
  };

  explicit TaylorGreen(Params p) : p_(p) {}

  std::string kind() const override { return "taylor-green"; }
  int channels() const override { return 3; }
  Index3 dims() const override { return p_.dims; }
  double dt() const override { return p_.dt; }
  const Params& params() const { return p_; }

  static constexpr double kLength = 2.0 * std::numbers::pi;

  Vec3 velocity(const Vec3& x, double t) const {
    const double decay = std::exp(-2.0 * p_.nu * t);
    return {std::sin(x[0]) * std::cos(x[1]) * std::cos(x[2]) * decay,
            -std::cos(x[0]) * std::sin(x[1]) * std::cos(x[2]) * decay, 0.0};
  }

  volume::UniformMesh mesh() const {
    volume::UniformMesh m;
    for (int a = 0; a < 3; ++a) m.spacing[a] = kLength / (p_.dims[a] - 1);
    return m;
  }

  volume::GridVolume field_at_time(double t) const {
    return volume::GridVolume::from_function(p_.dims, mesh(), 3, [&](const Vec3& x, std::span<double> out) {
      const Vec3 v = velocity(x, t);
      out[0] = v[0];
      out[1] = v[1];
      out[2] = v[2];
    });
  }

  volume::GridVolume field(int step) const override { return field_at_time(time(step)); }

 private:
  Params p_;
};

/// Replays volume files; step s reads files[(s - 1) % n].
class RawFileSequence : public Driver {
 public:
  RawFileSequence(std::vector<std::filesystem::path> files, double dt) : files_(std::move(files)), dt_(dt) {
    if (files_.empty()) throw ConfigError("raw-file sequence needs at least one file");
    first_ = io::read_volume(files_.front());
  }

  std::string kind() const override { return "raw-file"; }
  int channels() const override { return first_.channels(); }
  Index3 dims() const override { return first_.dims(); }
  double dt() const override { return dt_; }

  volume::GridVolume field(int step) const override {
    const auto idx = static_cast<std::size_t>(std::max(step - 1, 0)) % files_.size();
    return idx == 0 ? first_ : io::read_volume(files_[idx]);
  }

 private:
  std::vector<std::filesystem::path> files_;
  double dt_;
  volume::GridVolume first_;
};

/// Builds a driver from its JSON description {"kind": ..., ...}.
inline std::unique_ptr<Driver> make_driver(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  const std::string kind = j.value("kind", "gaussian-blobs");
  if (kind == "gaussian-blobs") {
    GaussianBlobs::Params p;
    if (j.contains("dims")) p.dims = j["dims"].get<Index3>();
    p.dt = j.value("dt", p.dt);
    p.blobs = j.value("blobs", p.blobs);
    p.sigma_min = j.value("sigma_min", p.sigma_min);
    p.sigma_max = j.value("sigma_max", p.sigma_max);
    p.speed = j.value("speed", p.speed);
    p.seed = j.value("seed", p.seed);
    return std::make_unique<GaussianBlobs>(p);
  }
  if (kind == "taylor-green") {
    TaylorGreen::Params p;
    if (j.contains("dims")) p.dims = j["dims"].get<Index3>();
    p.dt = j.value("dt", p.dt);
    p.nu = j.value("nu", p.nu);
    return std::make_unique<TaylorGreen>(p);
  }
  if (kind == "raw-file") {
    std::vector<std::filesystem::path> files;
    for (const auto& f : j.at("files")) {
      std::filesystem::path p = f.get<std::string>();
      files.push_back(p.is_relative() ? base_dir / p : p);
    }
    return std::make_unique<RawFileSequence>(std::move(files), j.value("dt", 0.01));
  }
  throw ConfigError("unknown driver kind '" + kind + "'");
}

}  // namespace dnr::drivers
