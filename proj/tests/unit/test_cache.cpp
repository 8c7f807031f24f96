#include "dnr/cache/workflow.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dnr;
using namespace dnr::cache;
using nlohmann::json;

namespace {

/// Field that encodes the step number: step + x for scalars, a slow uniform flow for vectors.
class StepDriver : public drivers::Driver {
 public:
  explicit StepDriver(int channels = 1, int n = 4, double dt = 0.1) : ch_(channels), n_(n), dt_(dt) {}
  std::string kind() const override { return "step"; }
  int channels() const override { return ch_; }
  Index3 dims() const override { return {n_, n_, n_}; }
  double dt() const override { return dt_; }
  volume::GridVolume field(int step) const override {
    return volume::GridVolume::from_function(dims(), volume::unit_cube_mesh(dims()), ch_,
                                             [&](const Vec3& x, std::span<double> out) {
                                               if (ch_ == 1) {
                                                 out[0] = step + x[0];
                                               } else {
                                                 out[0] = 0.01 * step;
                                                 out[1] = -0.01 * step;
                                                 out[2] = 0.1;
                                               }
                                             });
  }

 private:
  int ch_, n_;
  double dt_;
};

FramePtr raw_frame(int step, int channels = 1) {
  StepDriver d(channels);
  return std::make_shared<RawFrame>(std::make_shared<const volume::GridVolume>(d.field(step)), step, d.time(step));
}

std::vector<int> steps_of(const Window& w) {
  std::vector<int> out;
  for (const auto& f : w.frames()) out.push_back(f->step());
  return out;
}

std::vector<int> steps_of(const WindowView& v) {
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(v.step(i));
  return out;
}

json node(const std::string& id, const std::string& op, std::vector<std::string> inputs = {}, json params = json::object()) {
  return {{"id", id}, {"op", op}, {"inputs", inputs}, {"params", params}};
}

json trigger(json condition, std::vector<std::string> actions) { return {{"condition", condition}, {"actions", actions}}; }

json tiny_encode_params() { return {{"target_psnr", 30.0}, {"max_steps", 20}, {"ranks", {1, 1, 1}}}; }

json tiny_render_params() { return {{"width", 8}, {"height", 8}, {"step", 0.05}}; }

}  // namespace

// --- window ---

TEST(Window, FifoKeepsTheLastN) {
  Window w(3);
  for (int s = 1; s <= 4; ++s) w.admit(raw_frame(s));
  EXPECT_EQ(steps_of(w), (std::vector<int>{2, 3, 4}));
}

TEST(Window, EverySecondStepFilter) {
  Window w(3, Window::every(2));
  for (int s = 1; s <= 8; ++s) w.admit(raw_frame(s));
  EXPECT_EQ(steps_of(w), (std::vector<int>{4, 6, 8}));
}

TEST(Window, FifoLawOnRandomSequences) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    Window w(n);
    std::vector<int> admitted;
    int step = 0;
    const int count = static_cast<int>(rng() % 30);
    for (int i = 0; i < count; ++i) {
      step += 1 + static_cast<int>(rng() % 3);
      w.admit(raw_frame(step));
      admitted.push_back(step);
      const std::size_t keep = std::min<std::size_t>(n, admitted.size());
      ASSERT_EQ(steps_of(w), std::vector<int>(admitted.end() - keep, admitted.end()));
    }
  }
}

TEST(Window, CapacityLawBoundsBytes) {
  Window w(4);
  std::size_t frame = 0;
  for (int s = 1; s <= 10; ++s) {
    auto f = raw_frame(s);
    frame = std::max(frame, f->bytes());
    w.admit(f);
    EXPECT_LE(w.bytes(), 4 * frame);
  }
}

TEST(Window, RejectsBadSizeAndStaleSteps) {
  EXPECT_THROW(Window(0), ConfigError);
  Window w(2);
  w.admit(raw_frame(3));
  EXPECT_THROW(w.admit(raw_frame(3)), ConfigError);
  EXPECT_THROW(w.admit(raw_frame(2)), ConfigError);
}

// --- views ---

TEST(WindowView, ReverseRemapsIndices) {
  Window w(3);
  for (int s = 1; s <= 3; ++s) w.admit(raw_frame(s));
  const WindowView v(w);
  EXPECT_EQ(steps_of(v.reverse()), (std::vector<int>{3, 2, 1}));
  EXPECT_TRUE(v.reverse().reverse() == v);
  EXPECT_EQ(WindowView().reverse().size(), 0u);
  EXPECT_EQ(v.reverse().frame_ptr(0), w.frames().back());
}

TEST(WindowView, NegateFlipsEveryValue) {
  Window w(3);
  for (int s = 1; s <= 3; ++s) w.admit(raw_frame(s, 3));
  const WindowView v(w);
  const WindowView n = v.negate();
  const Vec3 p(0.3, 0.6, 0.2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    double a[3], b[3];
    v.query(i, p, a);
    n.query(i, p, b);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(b[c], -a[c]);
    const auto ga = v.decode(i), gb = n.decode(i);
    for (std::size_t k = 0; k < ga.values().size(); ++k) EXPECT_EQ(gb.values()[k], -ga.values()[k]);
  }
  EXPECT_TRUE(n.negate() == v);
}

TEST(WindowView, ReverseAndNegateCommute) {
  Window w(4);
  for (int s = 2; s <= 8; s += 2) w.admit(raw_frame(s, 3));
  const WindowView v(w);
  const auto a = v.reverse().negate();
  const auto b = v.negate().reverse();
  EXPECT_TRUE(a == b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.decode(i).values()[0], b.decode(i).values()[0]);
}

TEST(WindowView, RandomOperatorChainsReduceToTwoFlags) {
  Window w(5);
  for (int s = 1; s <= 5; ++s) w.admit(raw_frame(s, 3));
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    WindowView v(w);
    bool rev = false, neg = false;
    for (int k = static_cast<int>(rng() % 7); k > 0; --k) {
      if (rng() % 2) {
        v = v.reverse();
        rev = !rev;
      } else {
        v = v.negate();
        neg = !neg;
      }
    }
    WindowView expect(w);
    if (rev) expect = expect.reverse();
    if (neg) expect = expect.negate();
    EXPECT_TRUE(v == expect);
  }
}

TEST(WindowView, NegatingScalarsIsATypeError) {
  Window w(2);
  w.admit(raw_frame(1));
  EXPECT_THROW(WindowView(w).negate(), TypeError);
}

// --- conditions ---

TEST(First, FiresOnceAtTheFirstTimePastT) {
  First c(time_after(0.35));
  std::vector<double> fired;
  for (double t : {0.1, 0.2, 0.3, 0.4, 0.5})
    if (c.evaluate({0, t})) fired.push_back(t);
  EXPECT_EQ(fired, (std::vector<double>{0.4}));
}

TEST(First, NeverTruePredicateNeverFires) {
  First c(time_after(10.0));
  for (int s = 0; s < 50; ++s) EXPECT_FALSE(c.evaluate({s, s * 0.1}));
}

TEST(First, TrueAtStepZeroFiresThereOnly) {
  First c(step_at_least(0));
  EXPECT_TRUE(c.evaluate({0, 0.0}));
  for (int s = 1; s < 10; ++s) EXPECT_FALSE(c.evaluate({s, s * 0.1}));
}

TEST(First, StepLandingOnThresholdIsNotPastIt) {
  // 70 * 0.005 rounds above 0.35
  First c(time_after(0.35));
  int fired = -1;
  for (int s = 1; s <= 100; ++s)
    if (c.evaluate({s, s * 0.005})) fired = s;
  EXPECT_EQ(fired, 71);
}

TEST(First, OneShotLawOnRandomSequences) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double threshold = u(rng);
    First c(time_after(threshold));
    double t = 0.0;
    int fires = 0;
    bool seen_true = false;
    for (int s = 0; s < 40; ++s) {
      t += u(rng) * 0.1;
      const bool pred = t > threshold + 1e-12 * std::max(1.0, threshold);
      const bool fired = c.evaluate({s, t});
      if (fired) {
        ++fires;
        EXPECT_TRUE(pred);
        EXPECT_FALSE(seen_true);
      }
      seen_true = seen_true || pred;
    }
    EXPECT_LE(fires, 1);
    EXPECT_EQ(fires, seen_true ? 1 : 0);
  }
}

TEST(Conditions, ParsedFromJson) {
  EXPECT_TRUE(make_condition({{"op", "always"}})->evaluate({}));
  EXPECT_FALSE(make_condition({{"op", "never"}})->can_fire());
  EXPECT_TRUE(make_condition({{"op", "every"}, {"k", 3}})->evaluate({6, 0.0}));
  EXPECT_EQ(make_condition({{"op", "first"}, {"time_gt", 0.5}})->to_json()["time_gt"], 0.5);
  EXPECT_THROW(make_condition({{"op", "sometimes"}}), ConfigError);
  EXPECT_THROW(make_condition({{"op", "first"}}), ConfigError);
}

// --- graph ---

TEST(WorkflowGraph, BuildErrors) {
  const auto bad = [](json nodes, json triggers = json::array()) {
    return WorkflowGraph::from_json({{"nodes", nodes}, {"triggers", triggers}});
  };
  EXPECT_THROW(bad({node("W", "window", {"R"}, {{"size", 3}})}), ConfigError);
  EXPECT_THROW(bad({node("F", "field"), node("R", "raw", {"F"}), node("W", "window", {"R"}, {{"size", 0}})}),
               ConfigError);
  EXPECT_THROW(bad({node("F", "field"), node("F", "raw", {"F"})}), ConfigError);
  EXPECT_THROW(bad({node("F", "field"), node("X", "teleport", {"F"})}), ConfigError);
  EXPECT_THROW(bad({node("A", "reverse", {"B"}), node("B", "reverse", {"A"})}), ConfigError);
  EXPECT_THROW(bad({node("F", "field"), node("R", "raw", {"F"})}, {trigger({{"op", "always"}}, {"R"})}), ConfigError);
  EXPECT_THROW(bad({node("F", "field")}, {trigger({{"op", "always"}}, {"nowhere"})}), ConfigError);
  EXPECT_THROW(bad({node("F", "field"), node("P", "pathline", {"F"})}), ConfigError);
}

TEST(WorkflowGraph, ReachabilityFollowsFireableTriggers) {
  const auto g = WorkflowGraph::from_json(
      {{"nodes",
        {node("F", "field"), node("R", "raw", {"F"}), node("W", "window", {"R"}, {{"size", 2}}),
         node("V", "render", {"W"}), node("E", "encode", {"F"}), node("X", "render", {"E"})}},
       {"triggers", {trigger({{"op", "always"}}, {"V"}), trigger({{"op", "never"}}, {"X"})}}});
  for (const char* id : {"F", "R", "W", "V"}) EXPECT_TRUE(g.reachable(id)) << id;
  for (const char* id : {"E", "X"}) EXPECT_FALSE(g.reachable(id)) << id;
}

// --- runner ---

TEST(WorkflowRunner, UnconsumedEncodeNeverTrains) {
  const auto g = WorkflowGraph::from_json(
      {{"nodes",
        {node("F", "field"), node("E", "encode", {"F"}, tiny_encode_params()), node("R", "raw", {"F"}),
         node("W", "window", {"R"}, {{"size", 2}}), node("V", "render", {"W"}, tiny_render_params())}},
       {"triggers", {trigger({{"op", "always"}}, {"V"})}}});
  StepDriver d;
  WorkflowRunner run(g, d);
  run.run(4);
  EXPECT_EQ(run.evaluations("E"), 0);
  EXPECT_EQ(run.evaluations("R"), 4);
  EXPECT_EQ(run.evaluations("V"), 4);
  EXPECT_EQ(run.summary()["total_compress_time_s"], 0.0);
}

TEST(WorkflowRunner, ConstantFalseConditionKeepsUpstreamIdle) {
  const auto g = WorkflowGraph::from_json(
      {{"nodes",
        {node("F", "field"), node("E", "encode", {"F"}, tiny_encode_params()),
         node("W", "window", {"E"}, {{"size", 2}}), node("V", "render", {"W"}, tiny_render_params())}},
       {"triggers", {trigger({{"op", "never"}}, {"V"})}}});
  StepDriver d;
  WorkflowRunner run(g, d);
  run.run(3);
  EXPECT_EQ(run.evaluations("E"), 0);
  EXPECT_EQ(run.evaluations("V"), 0);
  EXPECT_EQ(run.window("W").size(), 0u);
  EXPECT_EQ(run.report().encodes.size(), 0u);
}

TEST(WorkflowRunner, NoTriggersMeansNoCompression) {
  const auto g = WorkflowGraph::from_json(
      {{"nodes", {node("F", "field"), node("E", "encode", {"F"}, tiny_encode_params()),
                  node("W", "window", {"E"}, {{"size", 2}})}}});
  StepDriver d;
  WorkflowRunner run(g, d);
  run.run(3);
  EXPECT_EQ(run.evaluations("E"), 0);
  for (const auto& r : run.report().rows) EXPECT_EQ(r.compress_time_s, 0.0);
}

TEST(WorkflowRunner, SharedEncodeTrainsOncePerStep) {
  const auto g = WorkflowGraph::from_json(
      {{"nodes",
        {node("F", "field"), node("E", "encode", {"F"}, tiny_encode_params()),
         node("A", "render", {"E"}, tiny_render_params()), node("B", "render", {"E"}, tiny_render_params())}},
       {"triggers", {trigger({{"op", "always"}}, {"A"}), trigger({{"op", "always"}}, {"B"})}}});
  StepDriver d(1, 8);
  WorkflowRunner run(g, d);
  run.run(2);
  EXPECT_EQ(run.evaluations("E"), 2);
  EXPECT_EQ(run.evaluations("A"), 2);
  EXPECT_EQ(run.evaluations("B"), 2);
  ASSERT_EQ(run.report().encodes.size(), 2u);
  for (const auto& r : run.report().rows) EXPECT_LE(r.compress_time_s, r.vis_time_s);
}

TEST(WorkflowRunner, MemoizationAndLazinessOnRandomTriggerPatterns) {
  // raw nodes stand in for pure nodes; actions consume them directly and through windows
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const int k1 = 1 + static_cast<int>(rng() % 4), k2 = 1 + static_cast<int>(rng() % 4);
    const auto g = WorkflowGraph::from_json(
        {{"nodes",
          {node("F", "field"), node("R", "raw", {"F"}), node("U", "raw", {"F"}),
           node("A", "render", {"R"}, tiny_render_params()), node("B", "render", {"R"}, tiny_render_params()),
           node("C", "render", {"U"}, tiny_render_params())}},
         {"triggers", {trigger({{"op", "every"}, {"k", k1}}, {"A"}), trigger({{"op", "every"}, {"k", k2}}, {"B", "A"}),
                       trigger({{"op", "never"}}, {"C"})}}});
    StepDriver d;
    WorkflowRunner run(g, d);
    const int steps = 1 + static_cast<int>(rng() % 12);
    run.run(steps);
    int any = 0, a = 0, b = 0;
    for (int s = 1; s <= steps; ++s) {
      any += s % k1 == 0 || s % k2 == 0;
      a += (s % k1 == 0) + (s % k2 == 0);
      b += s % k2 == 0;
    }
    EXPECT_EQ(run.evaluations("R"), any);
    EXPECT_EQ(run.evaluations("A"), a);
    EXPECT_EQ(run.evaluations("B"), b);
    EXPECT_EQ(run.evaluations("U"), 0);
    EXPECT_EQ(run.evaluations("C"), 0);
  }
}

TEST(WorkflowRunner, CacheBytesRiseThenPlateau) {
  const auto g = WorkflowGraph::from_json(
      {{"nodes",
        {node("F", "field"), node("R", "raw", {"F"}), node("W", "window", {"R"}, {{"size", 3}}),
         node("V", "render", {"W"}, tiny_render_params())}},
       {"triggers", {trigger({{"op", "first"}, {"step_ge", 6}}, {"V"})}}});
  StepDriver d;
  WorkflowRunner run(g, d);
  const auto& rows = run.run(7).rows;
  const std::size_t frame = raw_frame(1)->bytes();
  for (int s = 1; s <= 7; ++s) {
    const auto bytes = rows[s - 1].peak_cache_bytes;
    if (s == 6) {
      EXPECT_GT(bytes, 3 * frame);
    } else {
      EXPECT_EQ(bytes, std::min(s, 3) * frame) << "step " << s;
    }
  }
  EXPECT_EQ(run.report().trigger_steps[0], (std::vector<int>{6}));
}

TEST(WorkflowRunner, ActionFailuresAreRecordedAndTheRunContinues) {
  // pathlines over a scalar window fail every time they fire
  const auto g = WorkflowGraph::from_json(
      {{"nodes",
        {node("F", "field"), node("R", "raw", {"F"}), node("W", "window", {"R"}, {{"size", 2}}),
         node("P", "pathline", {"W"}, {{"points", {{0.5, 0.5, 0.5}}}})}},
       {"triggers", {trigger({{"op", "every"}, {"k", 2}}, {"P"})}}});
  StepDriver d;
  WorkflowRunner run(g, d);
  run.run(5);
  EXPECT_EQ(run.report().rows.size(), 5u);
  EXPECT_EQ(run.report().errors.size(), 2u);
  EXPECT_NE(run.report().errors[0].find("step 2"), std::string::npos);
}

TEST(WorkflowRunner, EncodeFailureIsFatalWithStepContext) {
  auto params = tiny_encode_params();
  params["ranks"] = {3, 1, 1};  // 4 nodes do not split into 3 bricks
  const auto g = WorkflowGraph::from_json(
      {{"nodes", {node("F", "field"), node("E", "encode", {"F"}, params), node("W", "window", {"E"}, {{"size", 2}}),
                  node("V", "render", {"W"}, tiny_render_params())}},
       {"triggers", {trigger({{"op", "first"}, {"step_ge", 3}}, {"V"})}}});
  StepDriver d;
  WorkflowRunner run(g, d);
  try {
    run.run(3);
    FAIL() << "expected a workflow error";
  } catch (const WorkflowError& e) {
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(WorkflowRunner, BackwardPathlinesWriteArtifacts) {
  const auto dir = std::filesystem::temp_directory_path() / "dnr_test_workflow";
  std::filesystem::remove_all(dir);
  const auto g = WorkflowGraph::from_json(
      {{"nodes",
        {node("F", "field"), node("R", "raw", {"F"}), node("W", "window", {"R"}, {{"size", 3}}),
         node("RW", "reverse", {"W"}), node("NW", "negate", {"RW"}),
         node("P", "pathline", {"NW"}, {{"points", {{0.5, 0.5, 0.5}, {0.2, 0.7, 0.4}}}, {"dt", 0.02}})}},
       {"triggers", {trigger({{"op", "first"}, {"step_ge", 4}}, {"P"})}}});
  StepDriver d(3);
  WorkflowRunner run(g, d, {dir});
  run.run(5);
  EXPECT_TRUE(run.report().errors.empty());
  EXPECT_TRUE(std::filesystem::exists(dir / "P_step4.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
  std::ifstream js(dir / "P_step4.json");
  const auto j = json::parse(js);
  EXPECT_EQ(j["negated"], true);
  EXPECT_EQ(j["seeds"][0]["end"][3], 0.2);  // window holds steps 2..4; traced back to t = 0.2
  std::ifstream sj(dir / "summary.json");
  EXPECT_EQ(json::parse(sj)["triggers"][0]["steps"], json({4}));
}
