#pragma once

#include "dnr/common.hpp"

#include <json.hpp>

#include <functional>
#include <memory>

namespace dnr::cache {

struct StepInfo {
  int step = 0;
  double time = 0.0;
};

/// Boolean condition over the step signal. Conditions are evaluated at every step.
class Condition {
 public:
  virtual ~Condition() = default;
  virtual bool evaluate(const StepInfo& s) = 0;
  /// False only when the condition can be proven never to fire; such triggers mark nothing reachable.
  virtual bool can_fire() const { return true; }
  virtual nlohmann::json to_json() const = 0;
};

using ConditionPtr = std::unique_ptr<Condition>;

/// Predicate over a step with a printable description.
struct StepPredicate {
  std::function<bool(const StepInfo&)> fn;
  nlohmann::json spec;
};

/// time > T, guarded against roundoff in step * dt so that a step landing on T does not count as past it.
inline StepPredicate time_after(double t) {
  const double guard = t + 1e-12 * std::max(1.0, std::abs(t));
  return {[guard](const StepInfo& s) { return s.time > guard; }, {{"time_gt", t}}};
}

inline StepPredicate step_at_least(int step) {
  return {[step](const StepInfo& s) { return s.step >= step; }, {{"step_ge", step}}};
}

class Always : public Condition {
 public:
  bool evaluate(const StepInfo&) override { return true; }
  nlohmann::json to_json() const override { return {{"op", "always"}}; }
};

class Never : public Condition {
 public:
  bool evaluate(const StepInfo&) override { return false; }
  bool can_fire() const override { return false; }
  nlohmann::json to_json() const override { return {{"op", "never"}}; }
};

/// True at the first evaluated step where the predicate holds, false at every other step.
class First : public Condition {
 public:
  explicit First(StepPredicate pred) : pred_(std::move(pred)) {}
  bool evaluate(const StepInfo& s) override {
    if (fired_ || !pred_.fn(s)) return false;
    fired_ = true;
    return true;
  }
  bool fired() const { return fired_; }
  nlohmann::json to_json() const override {
    auto j = pred_.spec;
    j["op"] = "first";
    return j;
  }

 private:
  StepPredicate pred_;
  bool fired_ = false;
};

/// True on every k-th step.
class Every : public Condition {
 public:
  explicit Every(int k) : k_(k) {
    if (k < 1) throw ConfigError("every: k must be >= 1");
  }
  bool evaluate(const StepInfo& s) override { return s.step % k_ == 0; }
  nlohmann::json to_json() const override { return {{"op", "every"}, {"k", k_}}; }

 private:
  int k_;
};

/// {"op": "always" | "never" | "every", "k": ... | "first", "time_gt": T | "step_ge": s}
inline ConditionPtr make_condition(const nlohmann::json& j) {
  const std::string op = j.value("op", "");
  if (op == "always") return std::make_unique<Always>();
  if (op == "never") return std::make_unique<Never>();
  if (op == "every") return std::make_unique<Every>(j.at("k").get<int>());
  if (op == "first") {
    if (j.contains("time_gt")) return std::make_unique<First>(time_after(j["time_gt"].get<double>()));
    if (j.contains("step_ge")) return std::make_unique<First>(step_at_least(j["step_ge"].get<int>()));
    throw ConfigError("first: needs time_gt or step_ge");
  }
  throw ConfigError("unknown condition op '" + op + "'");
}

}  // namespace dnr::cache
