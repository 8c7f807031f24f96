#pragma once

#include "dnr/volume/grid_volume.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>

namespace dnr::vis {

/// Time-ordered frames of a vector field that can be decoded to grids on demand.
class FrameSequence {
 public:
  virtual ~FrameSequence() = default;
  virtual std::size_t size() const = 0;
  virtual double time(std::size_t i) const = 0;
  virtual int channels() const = 0;
  virtual volume::GridVolume decode(std::size_t i) const = 0;
};

/// Plain in-memory sequence.
class GridSequence : public FrameSequence {
 public:
  GridSequence(std::vector<double> times, std::vector<volume::GridVolume> grids)
      : times_(std::move(times)), grids_(std::move(grids)) {
    if (times_.size() != grids_.size()) throw ConfigError("GridSequence: times and grids differ in length");
  }
  std::size_t size() const override { return grids_.size(); }
  double time(std::size_t i) const override { return times_.at(i); }
  int channels() const override { return grids_.empty() ? 0 : grids_.front().channels(); }
  volume::GridVolume decode(std::size_t i) const override { return grids_.at(i); }

 private:
  std::vector<double> times_;
  std::vector<volume::GridVolume> grids_;
};

/// One classical RK4 step of dx/dt = v(x, t). `v(p, t, out)` returns false outside the domain;
/// any such stage ends the step with nullopt.
template <typename Velocity>
std::optional<Vec3> rk4_step(Velocity&& v, const Vec3& p, double t, double dt) {
  Vec3 k1, k2, k3, k4;
  if (!v(p, t, k1)) return std::nullopt;
  if (!v(Vec3(p + (dt / 2) * k1), t + dt / 2, k2)) return std::nullopt;
  if (!v(Vec3(p + (dt / 2) * k2), t + dt / 2, k3)) return std::nullopt;
  if (!v(Vec3(p + dt * k3), t + dt, k4)) return std::nullopt;
  return Vec3(p + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4));
}

/// Velocity of a vector grid at p; false when p lies outside the grid bounds.
inline bool grid_velocity(const volume::GridVolume& g, const Vec3& p, Vec3& out) {
  if (!g.bounds().contains(p)) return false;
  double v[3];
  volume::sample_trilinear(g, p, std::span<double>(v, 3));
  out = Vec3(v[0], v[1], v[2]);
  return true;
}

enum class Termination { WindowExhausted, OutOfDomain, MaxSteps };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::WindowExhausted:
      return "window-exhausted";
    case Termination::OutOfDomain:
      return "out-of-domain";
    case Termination::MaxSteps:
      return "max-steps";
  }
  return "?";
}

struct PathVertex {
  Vec3 x;
  double t = 0.0;  // simulation time
  double speed = 0.0;
};

struct Pathline {
  int seed_id = 0;
  std::vector<PathVertex> vertices;
  Termination reason = Termination::WindowExhausted;
};

struct Seed {
  int id = 0;
  Vec3 x;
};

/// Seeds numbered in order.
inline std::vector<Seed> make_seeds(const std::vector<Vec3>& points) {
  std::vector<Seed> out;
  for (std::size_t i = 0; i < points.size(); ++i) out.push_back({static_cast<int>(i), points[i]});
  return out;
}

struct TraceOptions {
  double dt = 0.05;
  int max_steps = 100000;
};

struct TraceStats {
  int decodes = 0;
  int max_resident = 0;
  std::size_t peak_resident_bytes = 0;
};

/// Integrates every seed across the sequence in pseudo-time tau = |t_i - t_0|, one frame interval
/// at a time, with velocity linear in time between neighbouring frames. At most two decoded grids
/// are alive at once. Backward tracing is this same routine over a reversed, negated sequence.
inline std::vector<Pathline> trace_pathlines(const FrameSequence& w, const std::vector<Seed>& seeds,
                                             const TraceOptions& opt, TraceStats* stats = nullptr) {
  const std::size_t n = w.size();
  if (n == 0) throw ConfigError("trace_pathlines: empty window");
  if (w.channels() != 3) throw ConfigError("trace_pathlines: window does not hold a vector field");
  if (!(opt.dt > 0.0) || opt.max_steps < 1) throw ConfigError("trace_pathlines: need dt > 0 and max_steps >= 1");
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) tau[i] = std::abs(w.time(i) - w.time(0));
  for (std::size_t i = 1; i < n; ++i)
    if (!(tau[i] > tau[i - 1])) throw ConfigError("trace_pathlines: frame times are not monotone");
  const double sign = n > 1 && w.time(n - 1) < w.time(0) ? -1.0 : 1.0;
  const double t0 = w.time(0);

  struct Slot {
    std::size_t index = SIZE_MAX;
    std::optional<volume::GridVolume> grid;
  };
  Slot slots[2];
  TraceStats st;
  auto load = [&](std::size_t i, std::size_t keep) -> const volume::GridVolume& {
    for (auto& s : slots)
      if (s.grid && s.index == i) return *s.grid;
    Slot* victim = !slots[0].grid ? &slots[0] : !slots[1].grid ? &slots[1] : (slots[0].index == keep ? &slots[1] : &slots[0]);
    victim->grid.reset();
    victim->grid = w.decode(i);
    victim->index = i;
    ++st.decodes;
    int resident = 0;
    std::size_t bytes = 0;
    for (auto& s : slots)
      if (s.grid) {
        ++resident;
        bytes += s.grid->values().size() * sizeof(double);
      }
    st.max_resident = std::max(st.max_resident, resident);
    st.peak_resident_bytes = std::max(st.peak_resident_bytes, bytes);
    return *victim->grid;
  };

  struct Active {
    Vec3 x;
    double tau = 0.0;
    int steps = 0;
    bool done = false;
  };
  std::vector<Pathline> lines(seeds.size());
  std::vector<Active> state(seeds.size());
  {
    const auto& g0 = load(0, SIZE_MAX);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      lines[s].seed_id = seeds[s].id;
      state[s].x = seeds[s].x;
      Vec3 v;
      if (!grid_velocity(g0, seeds[s].x, v)) {
        lines[s].reason = Termination::OutOfDomain;
        state[s].done = true;
        continue;
      }
      lines[s].vertices.push_back({seeds[s].x, t0, v.norm()});
    }
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto& ga = load(i, i + 1);
    const auto& gb = load(i + 1, i);
    const double ta = tau[i], tb = tau[i + 1], span = tb - ta;
    auto velocity = [&](const Vec3& p, double s, Vec3& out) {
      Vec3 va, vb;
      if (!grid_velocity(ga, p, va) || !grid_velocity(gb, p, vb)) return false;
      const double f = std::clamp((s - ta) / span, 0.0, 1.0);
      out = va + f * (vb - va);
      return true;
    };
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      Active& a = state[s];
      while (!a.done && a.tau < tb) {
        if (a.steps >= opt.max_steps) {
          lines[s].reason = Termination::MaxSteps;
          a.done = true;
          break;
        }
        const double h = std::min(opt.dt, tb - a.tau);
        const auto next = rk4_step(velocity, a.x, a.tau, h);
        if (!next) {
          lines[s].reason = Termination::OutOfDomain;
          a.done = true;
          break;
        }
        a.x = *next;
        a.tau = tb - a.tau - h <= 1e-12 * span ? tb : a.tau + h;
        ++a.steps;
        Vec3 v;
        if (!velocity(a.x, a.tau, v)) {
          lines[s].reason = Termination::OutOfDomain;
          a.done = true;
          break;
        }
        lines[s].vertices.push_back({a.x, t0 + sign * a.tau, v.norm()});
      }
    }
  }
  for (std::size_t s = 0; s < seeds.size(); ++s)
    if (!state[s].done) lines[s].reason = Termination::WindowExhausted;
  if (stats) *stats = st;
  return lines;
}

inline std::vector<Pathline> trace_pathlines(const FrameSequence& w, const std::vector<Vec3>& seeds,
                                             const TraceOptions& opt, TraceStats* stats = nullptr) {
  return trace_pathlines(w, make_seeds(seeds), opt, stats);
}

/// End points of lines that stayed in the domain, keeping their seed ids. Seeds whose trace
/// left the domain are dropped.
inline std::vector<Seed> surviving_endpoints(const std::vector<Pathline>& lines) {
  std::vector<Seed> out;
  for (const auto& l : lines)
    if (l.reason != Termination::OutOfDomain && !l.vertices.empty()) out.push_back({l.seed_id, l.vertices.back().x});
  return out;
}

inline void write_pathlines_csv(const std::filesystem::path& path, const std::vector<Pathline>& lines) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.precision(17);
  os << "seed_id,step,x,y,z,t,speed\n";
  for (const auto& l : lines)
    for (std::size_t k = 0; k < l.vertices.size(); ++k) {
      const auto& v = l.vertices[k];
      os << l.seed_id << ',' << k << ',' << v.x[0] << ',' << v.x[1] << ',' << v.x[2] << ',' << v.t << ',' << v.speed
         << '\n';
    }
}

inline nlohmann::json pathline_summary(const std::vector<Pathline>& lines) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& l : lines) {
    nlohmann::json s = {{"seed_id", l.seed_id}, {"vertices", l.vertices.size()}, {"termination", to_string(l.reason)}};
    if (!l.vertices.empty()) {
      const auto& a = l.vertices.front();
      const auto& b = l.vertices.back();
      s["start"] = {a.x[0], a.x[1], a.x[2], a.t};
      s["end"] = {b.x[0], b.x[1], b.x[2], b.t};
    }
    seeds.push_back(s);
  }
  return {{"pathlines", lines.size()}, {"seeds", seeds}};
}

}  // namespace dnr::vis
