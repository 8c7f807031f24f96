#include "dnr/bench.hpp"
#include "dnr/cache/workflow.hpp"
#include "dnr/volume/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace dnr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Usage problems detected after parsing (bad values, missing inputs) exit with 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw UsageError("cannot open " + p.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

Index3 parse_triple(const std::string& s, const char* what) {
  Index3 out{};
  if (std::sscanf(s.c_str(), "%d,%d,%d", &out[0], &out[1], &out[2]) != 3) {
    int n = 0;
    if (std::sscanf(s.c_str(), "%d", &n) != 1) throw UsageError(std::string(what) + " must be X,Y,Z");
    out = {n, n, n};
  }
  return out;
}

/// Training flags shared by encode and run.
struct EncodeFlags {
  std::string ranks;
  int ghost = -1;
  std::optional<double> lambda;
  std::optional<double> target_psnr;
  std::optional<int> max_steps;
  std::optional<std::uint64_t> seed;
  std::string profile;

  void add(CLI::App* app) {
    app->add_option("--ranks", ranks, "rank grid X,Y,Z");
    app->add_option("--ghost", ghost, "ghost width in nodes");
    app->add_option("--lambda", lambda, "boundary loss weight");
    app->add_option("--target-psnr", target_psnr, "target PSNR in dB");
    app->add_option("--max-steps", max_steps, "training step budget per rank");
    app->add_option("--seed", seed, "training seed");
    app->add_option("--profile", profile, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  }

  /// Applies the flags on top of encode-node params.
  void apply(json& p) const {
    if (!ranks.empty()) p["ranks"] = parse_triple(ranks, "--ranks");
    if (ghost >= 0) p["ghost"] = ghost;
    if (lambda) p["lambda"] = *lambda;
    if (target_psnr) p["target_psnr"] = *target_psnr;
    if (max_steps) p["max_steps"] = *max_steps;
    if (seed) p["seed"] = *seed;
    if (!profile.empty()) p["profile"] = profile;
  }
};

json driver_json(const std::string& config, const std::string& kind, const std::string& dims, std::optional<std::uint64_t> seed,
                 std::optional<double> dt) {
  json d = json::object();
  if (!config.empty()) {
    const json c = read_json(config);
    d = c.contains("driver") ? c["driver"] : c;
  }
  if (!kind.empty()) d["kind"] = kind;
  if (!dims.empty()) d["dims"] = parse_triple(dims, "--dims");
  if (seed) d["seed"] = *seed;
  if (dt) d["dt"] = *dt;
  return d;
}

json encode_report(const dist::DnrModel& dnr, std::size_t input_bytes, double seconds) {
  json ranks = json::array();
  for (std::size_t r = 0; r < dnr.ranks.size(); ++r) {
    const auto& rec = dnr.ranks[r];
    ranks.push_back({{"rank", r}, {"steps", rec.steps_taken}, {"psnr", rec.achieved_psnr}, {"stop", rec.stop}});
  }
  return {{"ranks", ranks},
          {"global_psnr", dnr.global_psnr},
          {"target_psnr", dnr.target_psnr},
          {"budget_exhausted", !dnr.target_reached()},
          {"input_bytes", input_bytes},
          {"param_bytes", dnr.param_bytes()},
          {"compression_ratio", static_cast<double>(input_bytes) / dnr.param_bytes()},
          {"seconds", seconds}};
}

int cmd_generate(const json& driver, int step, const fs::path& out) {
  const auto d = drivers::make_driver(driver);
  const auto vol = d->field(step);
  io::write_volume(out, vol);
  std::cout << "wrote " << io::manifest_path(out).string() << " dims " << to_string(vol.dims()) << " channels "
            << vol.channels() << " time " << d->time(step) << '\n';
  return 0;
}

int cmd_encode(const volume::GridVolume& vol, const EncodeFlags& flags, const fs::path& out) {
  json params = {{"ghost", 2}};
  flags.apply(params);
  const auto cfg = cache::encode_config(params, vol.channels());
  Stopwatch sw;
  const auto res = dist::train_distributed(vol, cfg);
  const double secs = sw.seconds();
  dist::save_bundle(out, res.model);
  const auto report = encode_report(res.model, cache::float_bytes(vol), secs);
  write_json(out / "encode_report.json", report);
  for (const auto& r : report["ranks"])
    std::cout << "rank " << r["rank"] << ": psnr " << r["psnr"].get<double>() << " dB after " << r["steps"]
              << " steps (" << r["stop"].get<std::string>() << ")\n";
  std::cout << "global psnr " << res.model.global_psnr << " dB, compression ratio "
            << report["compression_ratio"].get<double>() << (report["budget_exhausted"] ? ", budget-exhausted" : "")
            << '\n';
  return 0;
}

int cmd_decode(const fs::path& bundle, const fs::path& out, const std::string& reference) {
  const auto dnr = dist::load_bundle(bundle);
  const auto vol = dist::decode_global(dnr);
  io::write_volume(out, vol);
  std::cout << "wrote " << io::manifest_path(out).string() << " dims " << to_string(vol.dims()) << '\n';
  if (!reference.empty()) std::cout << "psnr vs reference " << dist::global_psnr(dnr, io::read_volume(reference)) << " dB\n";
  return 0;
}

int cmd_render(const std::string& bundle, const std::string& input, const json& scene_json, const fs::path& out) {
  const auto scene = vis::scene_from_json(scene_json);
  vis::SceneRender r;
  if (!bundle.empty()) {
    r = vis::render_dnr(dist::load_bundle(bundle), scene);
  } else {
    r = vis::render_grid(io::read_volume(input), scene);
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  vis::write_image(out, r.image);
  std::cout << "wrote " << out.string() << " (" << r.image.width << "x" << r.image.height << ", " << r.stats.march.samples
            << " samples, " << r.stats.march.skipped_cells << " skipped cells, " << r.seconds << " s)\n";
  return 0;
}

int cmd_trace(const std::vector<std::string>& bundles, const std::vector<std::string>& inputs, std::vector<double> times,
              double frame_dt, const json& seeds, const std::string& direction, vis::TraceOptions topt,
              const fs::path& out) {
  std::vector<cache::FramePtr> frames;
  const std::size_t n = bundles.empty() ? inputs.size() : bundles.size();
  if (n == 0) throw UsageError("trace: give --bundles or --inputs");
  if (!times.empty() && times.size() != n) throw UsageError("trace: --times must list one time per frame");
  for (std::size_t i = 0; i < n; ++i) {
    const double t = times.empty() ? i * frame_dt : times[i];
    const int step = static_cast<int>(i);
    if (!bundles.empty()) {
      frames.push_back(std::make_shared<cache::NeuralVolume>(
          std::make_shared<const dist::DnrModel>(dist::load_bundle(bundles[i])), step, t));
    } else {
      frames.push_back(std::make_shared<cache::RawFrame>(
          std::make_shared<const volume::GridVolume>(io::read_volume(inputs[i])), step, t));
    }
  }
  cache::WindowView w(frames);
  if (direction == "backward") w = w.reverse().negate();
  vis::TraceStats st;
  const auto lines = vis::trace_pathlines(w, cache::pathline_seeds(seeds, frames.front()->bounds()), topt, &st);
  fs::path csv = out;
  if (csv.extension() != ".csv") csv += ".csv";
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  vis::write_pathlines_csv(csv, lines);
  auto summary = vis::pathline_summary(lines);
  summary["direction"] = direction;
  summary["dt"] = topt.dt;
  summary["decodes"] = st.decodes;
  write_json(fs::path(csv).replace_extension(".json"), summary);
  std::cout << "wrote " << lines.size() << " pathlines to " << csv.string() << '\n';
  return 0;
}

int cmd_run(json config, int steps, int window, const EncodeFlags& flags, const fs::path& out) {
  for (auto& n : config.at("nodes")) {
    if (!n.contains("params")) n["params"] = json::object();
    if (n.value("op", "") == "encode") flags.apply(n["params"]);
    if (n.value("op", "") == "window" && window > 0) n["params"]["size"] = window;
  }
  if (steps <= 0) steps = config.value("steps", 0);
  if (steps <= 0) throw UsageError("run: give --steps or a 'steps' entry in the config");
  const auto graph = cache::WorkflowGraph::from_json(config);
  const auto driver = drivers::make_driver(config.value("driver", json::object()));
  fs::create_directories(out);
  write_json(out / "config.json", config);
  cache::WorkflowRunner runner(graph, *driver, {out});
  runner.run(steps);
  const auto summary = runner.summary();
  std::cout << "ran " << steps << " steps; peak cache " << summary["peak_cache_bytes"] << " bytes; encodes "
            << summary["encode_runs"] << "; trigger steps";
  for (const auto& t : summary["triggers"]) std::cout << ' ' << t["steps"].dump();
  std::cout << "\nreport: " << (out / "report.csv").string() << '\n';
  for (const auto& e : runner.report().errors) std::cerr << "action error: " << e << '\n';
  return 0;
}

void print_scaling(const char* title, const std::vector<bench::ScalingRow>& rows) {
  std::printf("%s\n%6s %14s %11s %10s %10s %9s\n", title, "ranks", "dims", "mean_steps", "max_steps", "wall_s", "min_psnr");
  for (const auto& r : rows)
    std::printf("%6d %14s %11.1f %10d %10.2f %9.2f\n", r.ranks, to_string(r.dims).c_str(), r.mean_steps, r.max_steps,
                r.wall_seconds, r.min_psnr);
}

int cmd_bench(const std::string& suite, const bench::BenchOptions& o, const fs::path& out) {
  json j = {{"suite", suite}};
  if (suite == "weak-scaling" || suite == "strong-scaling") {
    const auto rows = suite == "weak-scaling" ? bench::weak_scaling(o) : bench::strong_scaling(o);
    print_scaling(suite.c_str(), rows);
    for (const auto& r : rows) j["rows"].push_back(bench::to_json(r));
    if (suite == "strong-scaling") j["speedup"] = rows.front().wall_seconds / rows.back().wall_seconds;
  } else if (suite == "compress-stability") {
    const auto r = bench::compress_stability(o);
    std::printf("compress-stability: mean %.3f ms/step, CoV %.3f over %zu runs\n", 1e3 * r.mean, r.cov,
                r.seconds_per_step.size());
    j["seconds_per_step"] = r.seconds_per_step;
    j["cov"] = r.cov;
  } else {
    throw UsageError("unknown bench suite '" + suite + "'");
  }
  if (!out.empty()) write_json(out, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed neural representations for in situ visualization"};
  app.require_subcommand(1);

  std::string config, out, kind, dims, bundle, input, reference;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  int step = 1;

  auto* gen = app.add_subcommand("generate", "write one driver step as a volume file");
  gen->add_option("--config", config, "driver or workflow config");
  gen->add_option("--kind", kind, "gaussian-blobs, taylor-green or raw-file");
  gen->add_option("--dims", dims, "X,Y,Z or N");
  gen->add_option("--seed", seed, "driver seed");
  gen->add_option("--dt", dt, "driver time step");
  gen->add_option("--step", step, "simulation step")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", out, "output volume base path")->required();

  EncodeFlags eflags;
  auto* enc = app.add_subcommand("encode", "compress a volume into a DNR bundle");
  enc->add_option("--input", input, "volume manifest");
  enc->add_option("--config", config, "driver config (used when --input is absent)");
  enc->add_option("--step", step, "driver step")->check(CLI::NonNegativeNumber);
  enc->add_option("--out", out, "bundle directory")->required();
  eflags.add(enc);

  auto* dec = app.add_subcommand("decode", "decode a DNR bundle to a volume file");
  dec->add_option("--bundle", bundle, "bundle directory")->required();
  dec->add_option("--reference", reference, "volume to report PSNR against");
  dec->add_option("--out", out, "output volume base path")->required();

  std::string scene_path;
  int width = 0, height = 0;
  double march_step = 0.0;
  auto* ren = app.add_subcommand("render", "volume-render a bundle or a volume file");
  auto* ren_b = ren->add_option("--bundle", bundle, "bundle directory");
  auto* ren_i = ren->add_option("--input", input, "volume manifest");
  ren_b->excludes(ren_i);
  ren->add_option("--config", scene_path, "scene config (camera, tf, step)");
  ren->add_option("--width", width, "image width");
  ren->add_option("--height", height, "image height");
  ren->add_option("--step", march_step, "ray-march step");
  ren->add_option("--out", out, "image path (.png or .ppm)")->required();

  std::vector<std::string> bundles, inputs;
  std::vector<double> times;
  double frame_dt = 1.0;
  std::string direction = "forward", seeds_path;
  vis::TraceOptions topt;
  auto* tr = app.add_subcommand("trace", "trace pathlines through a window of frames");
  tr->add_option("--bundles", bundles, "bundle directories, oldest first")->delimiter(',');
  tr->add_option("--inputs", inputs, "volume manifests, oldest first")->delimiter(',');
  tr->add_option("--times", times, "simulation time of each frame")->delimiter(',');
  tr->add_option("--frame-dt", frame_dt, "time between frames when --times is absent");
  tr->add_option("--seeds", seeds_path, "seed config (points or random box)")->required();
  tr->add_option("--direction", direction, "forward or backward")->check(CLI::IsMember({"forward", "backward"}));
  tr->add_option("--dt", topt.dt, "integration step");
  tr->add_option("--max-steps", topt.max_steps, "step limit per seed");
  tr->add_option("--out", out, "CSV path")->required();

  int steps = 0, window = 0;
  EncodeFlags rflags;
  auto* run = app.add_subcommand("run", "run a workflow config against its driver");
  run->add_option("--config", config, "workflow config")->required();
  run->add_option("--steps", steps, "simulation steps");
  run->add_option("--window", window, "override every window size");
  run->add_option("--out", out, "run directory")->required();
  rflags.add(run);

  std::string suite;
  bench::BenchOptions bopt;
  auto* ben = app.add_subcommand("bench", "timing and scaling suites");
  ben->add_option("suite", suite, "weak-scaling, strong-scaling or compress-stability")->required();
  ben->add_option("--profile", bopt.profile)->check(CLI::IsMember({"desk", "paper"}));
  ben->add_option("--target-psnr", bopt.target_psnr);
  ben->add_option("--max-steps", bopt.max_steps);
  ben->add_option("--base-dims", bopt.base_dims, "nodes per rank per axis");
  ben->add_option("--repeats", bopt.repeats);
  ben->add_option("--seed", bopt.seed);
  ben->add_option("--seeds", bopt.seeds, "seeds averaged per scaling row")->check(CLI::PositiveNumber);
  ben->add_option("--out", out, "JSON result path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(driver_json(config, kind, dims, seed, dt), step, out);
    if (*enc) {
      if (input.empty() && config.empty()) throw UsageError("encode: give --input or --config");
      volume::GridVolume vol = input.empty() ? drivers::make_driver(driver_json(config, "", "", {}, {}))->field(step)
                                             : io::read_volume(input);
      return cmd_encode(vol, eflags, out);
    }
    if (*dec) return cmd_decode(bundle, out, reference);
    if (*ren) {
      if (bundle.empty() && input.empty()) throw UsageError("render: give --bundle or --input");
      json scene = scene_path.empty() ? json::object() : read_json(scene_path);
      if (scene.contains("render")) scene = scene["render"];
      if (width > 0) scene["width"] = width;
      if (height > 0) scene["height"] = height;
      if (march_step > 0) scene["step"] = march_step;
      return cmd_render(bundle, input, scene, out);
    }
    if (*tr) return cmd_trace(bundles, inputs, times, frame_dt, read_json(seeds_path), direction, topt, out);
    if (*run) return cmd_run(read_json(config), steps, window, rflags, out);
    if (*ben) return cmd_bench(suite, bopt, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
