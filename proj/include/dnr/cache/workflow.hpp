#pragma once

#include "dnr/cache/trigger.hpp"
#include "dnr/cache/window.hpp"
#include "dnr/dist/train_distributed.hpp"
#include "dnr/drivers.hpp"
#include "dnr/timing.hpp"
#include "dnr/vis/scene.hpp"

#include <fstream>
#include <map>
#include <random>
#include <variant>

namespace dnr::cache {

/// Fatal workflow failure (encode errors), carrying the step at which it happened.
class WorkflowError : public std::runtime_error {
 public:
  WorkflowError(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

struct NodeSpec {
  std::string id;
  std::string op;
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> inputs;
};

struct TriggerSpec {
  nlohmann::json condition;
  std::vector<std::string> actions;
};

enum class Kind { Field, Frame, Window, Action };

inline Kind kind_of(const std::string& op) {
  if (op == "field") return Kind::Field;
  if (op == "encode" || op == "raw") return Kind::Frame;
  if (op == "window" || op == "reverse" || op == "negate") return Kind::Window;
  if (op == "render" || op == "pathline") return Kind::Action;
  throw ConfigError("unknown node op '" + op + "'");
}

/// Static dataflow graph: named nodes, data edges and trigger registrations. Validated and
/// analysed for reachability when built.
class WorkflowGraph {
 public:
  WorkflowGraph(std::vector<NodeSpec> nodes, std::vector<TriggerSpec> triggers)
      : nodes_(std::move(nodes)), triggers_(std::move(triggers)) {
    build();
  }

  static WorkflowGraph from_json(const nlohmann::json& j) {
    std::vector<NodeSpec> nodes;
    for (const auto& n : j.at("nodes")) {
      NodeSpec s;
      s.id = n.at("id").get<std::string>();
      s.op = n.at("op").get<std::string>();
      if (n.contains("params")) s.params = n["params"];
      if (n.contains("inputs")) s.inputs = n["inputs"].get<std::vector<std::string>>();
      nodes.push_back(std::move(s));
    }
    std::vector<TriggerSpec> triggers;
    if (j.contains("triggers"))
      for (const auto& t : j["triggers"]) triggers.push_back({t.at("condition"), t.at("actions").get<std::vector<std::string>>()});
    return WorkflowGraph(std::move(nodes), std::move(triggers));
  }

  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<TriggerSpec>& triggers() const { return triggers_; }
  const NodeSpec& node(int i) const { return nodes_.at(i); }
  int index_of(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw ConfigError("unknown node '" + id + "'");
    return it->second;
  }
  const std::vector<int>& inputs(int i) const { return inputs_.at(i); }
  /// Nodes in dependency order.
  const std::vector<int>& topo_order() const { return topo_; }
  bool reachable(int i) const { return reachable_.at(i); }
  bool reachable(const std::string& id) const { return reachable(index_of(id)); }

 private:
  void build() {
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      if (!index_.emplace(nodes_[i].id, i).second) throw ConfigError("duplicate node id '" + nodes_[i].id + "'");
      kind_of(nodes_[i].op);
    }
    inputs_.resize(nodes_.size());
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
      const auto& n = nodes_[i];
      for (const auto& in : n.inputs) {
        const auto it = index_.find(in);
        if (it == index_.end()) throw ConfigError("node '" + n.id + "' has dangling input '" + in + "'");
        inputs_[i].push_back(it->second);
      }
      check_arity(i);
    }
    topo_sort();
    reachable_.assign(nodes_.size(), false);
    for (const auto& t : triggers_) {
      const auto cond = make_condition(t.condition);
      for (const auto& a : t.actions) {
        const int i = index_of(a);
        if (kind_of(nodes_[i].op) != Kind::Action) throw ConfigError("trigger action '" + a + "' is not an action node");
        if (cond->can_fire()) mark(i);
      }
    }
  }

  void check_arity(int i) {
    const auto& n = nodes_[i];
    const Kind k = kind_of(n.op);
    auto input_kind = [&](int j) { return kind_of(nodes_[inputs_[i][j]].op); };
    const std::size_t want = k == Kind::Field ? 0 : 1;
    if (n.inputs.size() != want) {
      throw ConfigError("node '" + n.id + "' (" + n.op + ") takes " + std::to_string(want) + " input(s)");
    }
    if (k == Kind::Frame && input_kind(0) != Kind::Field) throw ConfigError("node '" + n.id + "' must read a field");
    if (n.op == "window") {
      if (input_kind(0) != Kind::Frame) throw ConfigError("window '" + n.id + "' must read an encode or raw node");
      if (n.params.value("size", 0) < 1) throw ConfigError("window '" + n.id + "': size must be >= 1");
    }
    if ((n.op == "reverse" || n.op == "negate" || n.op == "pathline") && input_kind(0) != Kind::Window) {
      throw ConfigError("node '" + n.id + "' must read a window");
    }
    if (n.op == "render" && input_kind(0) == Kind::Action) throw ConfigError("render '" + n.id + "' cannot read an action");
  }

  void topo_sort() {
    std::vector<int> state(nodes_.size(), 0);
    std::function<void(int)> visit = [&](int i) {
      if (state[i] == 2) return;
      if (state[i] == 1) throw ConfigError("workflow graph has a cycle through '" + nodes_[i].id + "'");
      state[i] = 1;
      for (int j : inputs_[i]) visit(j);
      state[i] = 2;
      topo_.push_back(i);
    };
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) visit(i);
  }

  void mark(int i) {
    if (reachable_[i]) return;
    reachable_[i] = true;
    for (int j : inputs_[i]) mark(j);
  }

  std::vector<NodeSpec> nodes_;
  std::vector<TriggerSpec> triggers_;
  std::map<std::string, int> index_;
  std::vector<std::vector<int>> inputs_;
  std::vector<int> topo_;
  std::vector<bool> reachable_;
};

/// Distributed training configuration of an encode node.
inline dist::DistributedConfig encode_config(const nlohmann::json& p, int channels) {
  const auto prof = inr::profile_by_name(p.value("profile", std::string("desk")), channels);
  dist::DistributedConfig cfg;
  cfg.encoding = prof.encoding;
  cfg.mlp = prof.mlp;
  cfg.train = prof.train;
  cfg.rank_grid = p.value("ranks", Index3{1, 1, 1});
  cfg.ghost_width = p.value("ghost", cfg.ghost_width);
  cfg.train.target_psnr = p.value("target_psnr", 45.0);
  cfg.train.lambda = p.value("lambda", cfg.train.lambda);
  cfg.train.max_steps = p.value("max_steps", cfg.train.max_steps);
  cfg.train.seed = p.value("seed", cfg.train.seed);
  return cfg;
}

/// Size of a grid as float32 samples, the reference for compression ratios.
inline std::size_t float_bytes(const volume::GridVolume& g) { return g.values().size() * sizeof(float); }

struct StepRow {
  int step = 0;
  double time = 0.0;
  double sim_time_s = 0.0;
  double vis_time_s = 0.0;
  double compress_time_s = 0.0;
  std::size_t peak_cache_bytes = 0;
  std::vector<std::string> events;
};

struct EncodeRecord {
  std::string node;
  int step = 0;
  double compression_ratio = 0.0;
  double achieved_psnr = 0.0;
  bool budget_exhausted = false;
  double seconds = 0.0;
};

struct RunReport {
  std::vector<StepRow> rows;
  std::vector<EncodeRecord> encodes;
  std::vector<std::vector<int>> trigger_steps;
  std::vector<std::string> errors;
  std::map<std::string, int> evaluations;
};

struct RunOptions {
  std::filesystem::path out_dir;  // empty: no artifacts are written
};

/// Seeds of a pathline node: {"points": [[x,y,z],...]} or {"random": {"count", "box": [lo, hi], "seed"}}.
inline std::vector<Vec3> pathline_seeds(const nlohmann::json& p, const Box3& bounds) {
  std::vector<Vec3> seeds;
  if (p.contains("points"))
    for (const auto& s : p["points"]) seeds.push_back(vis::vec3_from_json(s));
  if (p.contains("random")) {
    const auto& r = p["random"];
    Box3 box = bounds;
    if (r.contains("box")) box = {vis::vec3_from_json(r["box"].at(0)), vis::vec3_from_json(r["box"].at(1))};
    std::mt19937_64 rng(r.value("seed", 1u));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = r.value("count", 16);
    for (int i = 0; i < n; ++i) {
      Vec3 x;
      for (int a = 0; a < 3; ++a) x[a] = box.lo[a] + u(rng) * (box.hi[a] - box.lo[a]);
      seeds.push_back(x);
    }
  }
  if (seeds.empty()) throw ConfigError("pathline: no seeds configured");
  return seeds;
}

/// Executes a workflow graph against a simulation driver, one step at a time.
class WorkflowRunner {
 public:
  using GridPtr = std::shared_ptr<const volume::GridVolume>;
  using Value = std::variant<std::monostate, GridPtr, FramePtr, WindowView>;

  WorkflowRunner(const WorkflowGraph& graph, const drivers::Driver& driver, RunOptions opt = {})
      : graph_(graph), driver_(driver), opt_(std::move(opt)), evals_(graph.nodes().size(), 0) {
    for (const auto& t : graph_.triggers()) conditions_.push_back(make_condition(t.condition));
    report_.trigger_steps.resize(conditions_.size());
    for (int i = 0; i < static_cast<int>(graph_.nodes().size()); ++i) {
      const auto& n = graph_.node(i);
      if (n.op == "window") {
        const int every = n.params.value("every", 1);
        windows_.emplace(i, Window(n.params.at("size").get<int>(), every > 1 ? Window::every(every) : Window::Filter{}));
      }
    }
    if (!opt_.out_dir.empty()) std::filesystem::create_directories(opt_.out_dir);
  }

  /// Times a node was computed (memoized reuse and unreachable nodes do not count).
  int evaluations(const std::string& id) const { return evals_.at(graph_.index_of(id)); }
  const Window& window(const std::string& id) const { return windows_.at(graph_.index_of(id)); }
  const RunReport& report() const { return report_; }

  /// Advances the simulation to `step` and runs the graph on it.
  const StepRow& step(int s) {
    StepRow row;
    row.step = s;
    row.time = driver_.time(s);
    current_step_ = s;
    memo_.assign(graph_.nodes().size(), std::monostate{});
    compress_seconds_ = 0.0;

    Stopwatch sim;
    field_ = std::make_shared<const volume::GridVolume>(driver_.field(s));
    row.sim_time_s = sim.seconds();

    Stopwatch vis;
    // windows fill on every step they are reachable, whether or not anything fires
    for (int i : graph_.topo_order()) {
      if (graph_.node(i).op != "window" || !graph_.reachable(i)) continue;
      Window& w = windows_.at(i);
      if (!w.accepts(s)) continue;
      w.admit(std::get<FramePtr>(eval(graph_.inputs(i)[0])));
      row.events.push_back("admit:" + graph_.node(i).id);
    }
    std::size_t cache = 0;
    for (const auto& [i, w] : windows_) cache += w.bytes();
    row.peak_cache_bytes = cache;

    const StepInfo info{s, row.time};
    for (std::size_t t = 0; t < conditions_.size(); ++t) {
      if (!conditions_[t]->evaluate(info)) continue;
      report_.trigger_steps[t].push_back(s);
      row.events.push_back("fire:" + std::to_string(t));
      for (const auto& a : graph_.triggers()[t].actions) {
        const int i = graph_.index_of(a);
        try {
          const std::size_t transient = run_action(i);
          row.peak_cache_bytes = std::max(row.peak_cache_bytes, cache + transient);
          row.events.push_back(graph_.node(i).op + ":" + a);
        } catch (const WorkflowError&) {
          throw;
        } catch (const std::exception& e) {
          const std::string msg = "step " + std::to_string(s) + ": action '" + a + "' failed: " + e.what();
          report_.errors.push_back(msg);
          row.events.push_back("error:" + a);
        }
      }
    }
    row.vis_time_s = vis.seconds();
    row.compress_time_s = std::min(compress_seconds_, row.vis_time_s);
    memo_.assign(graph_.nodes().size(), std::monostate{});
    field_.reset();
    report_.rows.push_back(std::move(row));
    return report_.rows.back();
  }

  /// Runs steps 1..steps and writes the report when an output directory is set.
  const RunReport& run(int steps) {
    if (steps < 1) throw ConfigError("run: steps must be >= 1");
    for (int s = 1; s <= steps; ++s) step(s);
    for (int i = 0; i < static_cast<int>(graph_.nodes().size()); ++i) report_.evaluations[graph_.node(i).id] = evals_[i];
    if (!opt_.out_dir.empty()) write_report(opt_.out_dir);
    return report_;
  }

  nlohmann::json summary() const {
    nlohmann::json enc = nlohmann::json::array();
    double ratio = 0.0;
    int exhausted = 0;
    for (const auto& e : report_.encodes) {
      enc.push_back({{"node", e.node},
                     {"step", e.step},
                     {"compression_ratio", e.compression_ratio},
                     {"achieved_psnr", e.achieved_psnr},
                     {"budget_exhausted", e.budget_exhausted},
                     {"seconds", e.seconds}});
      ratio += e.compression_ratio;
      exhausted += e.budget_exhausted;
    }
    std::size_t peak = 0;
    double sim = 0, vis = 0, comp = 0;
    for (const auto& r : report_.rows) {
      peak = std::max(peak, r.peak_cache_bytes);
      sim += r.sim_time_s;
      vis += r.vis_time_s;
      comp += r.compress_time_s;
    }
    nlohmann::json triggers = nlohmann::json::array();
    for (std::size_t t = 0; t < conditions_.size(); ++t)
      triggers.push_back({{"condition", conditions_[t]->to_json()}, {"steps", report_.trigger_steps[t]}});
    nlohmann::json evals = nlohmann::json::object();
    for (int i = 0; i < static_cast<int>(graph_.nodes().size()); ++i) evals[graph_.node(i).id] = evals_[i];
    return {{"steps", report_.rows.size()},
            {"driver", driver_.kind()},
            {"mean_compression_ratio", report_.encodes.empty() ? 0.0 : ratio / report_.encodes.size()},
            {"encode_runs", report_.encodes.size()},
            {"budget_exhausted", exhausted},
            {"encodes", enc},
            {"triggers", triggers},
            {"peak_cache_bytes", peak},
            {"total_sim_time_s", sim},
            {"total_vis_time_s", vis},
            {"total_compress_time_s", comp},
            {"node_evaluations", evals},
            {"errors", report_.errors}};
  }

  void write_report(const std::filesystem::path& dir) const {
    std::ofstream csv(dir / "report.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "report.csv").string());
    csv.precision(9);
    csv << "step,time,sim_time_s,vis_time_s,compress_time_s,peak_cache_bytes,events\n";
    for (const auto& r : report_.rows) {
      std::string ev;
      for (const auto& e : r.events) ev += (ev.empty() ? "" : ";") + e;
      csv << r.step << ',' << r.time << ',' << r.sim_time_s << ',' << r.vis_time_s << ',' << r.compress_time_s << ','
          << r.peak_cache_bytes << ',' << ev << '\n';
    }
    std::ofstream js(dir / "summary.json");
    js << summary().dump(2) << '\n';
  }

 private:
  const Value& eval(int i) {
    if (!std::holds_alternative<std::monostate>(memo_[i])) return memo_[i];
    const auto& n = graph_.node(i);
    Value v;
    if (n.op == "field") {
      v = field_;
    } else if (n.op == "encode") {
      v = encode(i, std::get<GridPtr>(eval(graph_.inputs(i)[0])));
    } else if (n.op == "raw") {
      v = FramePtr(std::make_shared<RawFrame>(std::get<GridPtr>(eval(graph_.inputs(i)[0])), current_step_,
                                              driver_.time(current_step_)));
    } else if (n.op == "window") {
      v = WindowView(windows_.at(i));
    } else if (n.op == "reverse") {
      v = std::get<WindowView>(eval(graph_.inputs(i)[0])).reverse();
    } else if (n.op == "negate") {
      v = std::get<WindowView>(eval(graph_.inputs(i)[0])).negate();
    } else {
      throw ConfigError("node '" + n.id + "' is an action and has no value");
    }
    ++evals_[i];
    memo_[i] = std::move(v);
    return memo_[i];
  }

  FramePtr encode(int i, const GridPtr& field) {
    const auto& n = graph_.node(i);
    Stopwatch sw;
    try {
      auto res = dist::train_distributed(*field, encode_config(n.params, field->channels()));
      auto model = std::make_shared<const dist::DnrModel>(std::move(res.model));
      auto frame = std::make_shared<NeuralVolume>(model, current_step_, driver_.time(current_step_));
      const double secs = sw.seconds();
      compress_seconds_ += secs;
      report_.encodes.push_back({n.id, current_step_, static_cast<double>(float_bytes(*field)) / frame->bytes(),
                                 frame->achieved_psnr(), frame->budget_exhausted(), secs});
      return frame;
    } catch (const std::exception& e) {
      throw WorkflowError(current_step_, "encode '" + n.id + "' failed: " + e.what());
    }
  }

  /// Runs an action node; returns the transient bytes it held at peak.
  std::size_t run_action(int i) {
    const auto& n = graph_.node(i);
    const Value& in = eval(graph_.inputs(i)[0]);
    ++evals_[i];
    if (n.op == "render") return render(n, in);
    return pathline(n, std::get<WindowView>(in));
  }

  std::filesystem::path artifact(const NodeSpec& n, const std::string& suffix) const {
    return opt_.out_dir / (n.id + "_step" + std::to_string(current_step_) + suffix);
  }

  std::size_t render(const NodeSpec& n, const Value& in) {
    const auto scene = vis::scene_from_json(n.params);
    const std::string ext = n.params.value("format", std::string("png")) == "ppm" ? ".ppm" : ".png";
    std::size_t peak = 0;
    auto emit = [&](const vis::SceneRender& r, int element) {
      peak = std::max(peak, r.transient_bytes);
      if (!opt_.out_dir.empty()) vis::write_image(artifact(n, "_" + std::to_string(element) + ext), r.image);
    };
    auto render_frame = [&](const Frame& f, int element) {
      if (const auto* nv = dynamic_cast<const NeuralVolume*>(&f)) {
        emit(vis::render_dnr(nv->model(), scene), element);
      } else {
        emit(vis::render_grid(dynamic_cast<const RawFrame&>(f).grid(), scene), element);
      }
    };
    if (const auto* g = std::get_if<GridPtr>(&in)) {
      emit(vis::render_grid(**g, scene), 0);
    } else if (const auto* f = std::get_if<FramePtr>(&in)) {
      render_frame(**f, 0);
    } else {
      const auto& w = std::get<WindowView>(in);
      for (std::size_t e = 0; e < w.size(); ++e) render_frame(w.frame(e), static_cast<int>(e));
    }
    return peak;
  }

  std::size_t pathline(const NodeSpec& n, const WindowView& w) {
    if (w.size() == 0) throw ConfigError("pathline: window is empty");
    vis::TraceOptions topt;
    topt.dt = n.params.value("dt", topt.dt);
    topt.max_steps = n.params.value("max_steps", topt.max_steps);
    vis::TraceStats st;
    const auto lines = vis::trace_pathlines(w, pathline_seeds(n.params, w.frame(0).bounds()), topt, &st);
    if (!opt_.out_dir.empty()) {
      vis::write_pathlines_csv(artifact(n, ".csv"), lines);
      auto j = vis::pathline_summary(lines);
      j["step"] = current_step_;
      j["decodes"] = st.decodes;
      j["reversed"] = w.reversed();
      j["negated"] = w.negated();
      std::ofstream(artifact(n, ".json")) << j.dump(2) << '\n';
    }
    return st.peak_resident_bytes;
  }

  const WorkflowGraph& graph_;
  const drivers::Driver& driver_;
  RunOptions opt_;
  std::vector<int> evals_;
  std::vector<ConditionPtr> conditions_;
  std::map<int, Window> windows_;
  std::vector<Value> memo_;
  GridPtr field_;
  int current_step_ = 0;
  double compress_seconds_ = 0.0;
  RunReport report_;
};

}  // namespace dnr::cache
