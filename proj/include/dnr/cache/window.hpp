#pragma once

#include "dnr/cache/frame.hpp"
#include "dnr/vis/pathline.hpp"

#include <deque>
#include <functional>

namespace dnr::cache {

/// Raised when an array operator is applied to frames of the wrong kind.
class TypeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Bounded FIFO of the N most recent admitted frames, oldest first.
class Window {
 public:
  using Filter = std::function<bool(int step)>;

  explicit Window(int capacity, Filter filter = {}) : capacity_(capacity), filter_(std::move(filter)) {
    if (capacity < 1) throw ConfigError("window: size must be >= 1");
  }

  /// Admission filter that keeps every k-th step.
  static Filter every(int k) {
    if (k < 1) throw ConfigError("window: 'every' must be >= 1");
    return [k](int step) { return step % k == 0; };
  }

  int capacity() const { return capacity_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const FramePtr& at(std::size_t i) const { return frames_.at(i); }
  const std::deque<FramePtr>& frames() const { return frames_; }

  /// True when `step` would pass the admission filter.
  bool accepts(int step) const { return !filter_ || filter_(step); }

  /// Appends `f` if it passes the filter, evicting the oldest frame when full.
  bool admit(FramePtr f) {
    if (!f) throw ConfigError("window: null frame");
    if (!accepts(f->step())) return false;
    if (!frames_.empty() && f->step() <= frames_.back()->step()) {
      throw ConfigError("window: steps must be strictly increasing");
    }
    if (static_cast<int>(frames_.size()) == capacity_) frames_.pop_front();
    frames_.push_back(std::move(f));
    return true;
  }

  std::size_t bytes() const {
    std::size_t b = 0;
    for (const auto& f : frames_) b += f->bytes();
    return b;
  }

 private:
  int capacity_;
  Filter filter_;
  std::deque<FramePtr> frames_;
};

/// Read-only view of a window snapshot with index reversal and value negation flags. Frames are
/// shared, never copied.
class WindowView : public vis::FrameSequence {
 public:
  WindowView() = default;
  explicit WindowView(const Window& w) : frames_(w.frames().begin(), w.frames().end()) {}
  explicit WindowView(std::vector<FramePtr> frames) : frames_(std::move(frames)) {}

  std::size_t size() const override { return frames_.size(); }
  bool reversed() const { return reversed_; }
  bool negated() const { return negated_; }

  const Frame& frame(std::size_t i) const {
    if (i >= frames_.size()) throw DomainError("window view: index out of range");
    return *frames_[reversed_ ? frames_.size() - 1 - i : i];
  }
  FramePtr frame_ptr(std::size_t i) const { return frames_.at(reversed_ ? frames_.size() - 1 - i : i); }

  double time(std::size_t i) const override { return frame(i).time(); }
  int step(std::size_t i) const { return frame(i).step(); }
  int channels() const override { return frames_.empty() ? 0 : frames_.front()->channels(); }

  volume::GridVolume decode(std::size_t i) const override {
    auto g = frame(i).decode();
    if (negated_)
      for (auto& v : g.values()) v = -v;
    return g;
  }

  void query(std::size_t i, const Vec3& p, std::span<double> out) const {
    frame(i).query(p, out);
    if (negated_)
      for (auto& v : out) v = -v;
  }

  WindowView reverse() const {
    WindowView v = *this;
    v.reversed_ = !reversed_;
    return v;
  }

  /// Sign-flipped view; only vector-valued frames can be negated.
  WindowView negate() const {
    for (const auto& f : frames_)
      if (f->channels() != 3) throw TypeError("negate: window holds scalar frames");
    WindowView v = *this;
    v.negated_ = !negated_;
    return v;
  }

  std::size_t bytes() const {
    std::size_t b = 0;
    for (const auto& f : frames_) b += f->bytes();
    return b;
  }

  friend bool operator==(const WindowView& a, const WindowView& b) {
    if (a.size() != b.size() || a.negated_ != b.negated_) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.frame_ptr(i) != b.frame_ptr(i)) return false;
    return true;
  }

 private:
  std::vector<FramePtr> frames_;
  bool reversed_ = false;
  bool negated_ = false;
};

}  // namespace dnr::cache
