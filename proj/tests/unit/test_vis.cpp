#include "dnr/drivers.hpp"
#include "dnr/vis/pathline.hpp"
#include "dnr/vis/render.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <random>

using namespace dnr;
using namespace dnr::vis;

namespace {

volume::GridVolume blob_field(int n, std::uint64_t seed = 3) {
  drivers::GaussianBlobs blobs({{n, n, n}, 0.01, 4, 0.1, 0.2, 0.3, seed});
  return blobs.field(1);
}

volume::GridVolume constant_field(int n, double v) {
  return volume::GridVolume::from_function({n, n, n}, volume::unit_cube_mesh({n, n, n}), 1,
                                           [&](const Vec3&, std::span<double> out) { out[0] = v; });
}

TransferFunction flat_tf(Rgba c) {
  TransferFunction tf;
  tf.points = {{0.0, c}, {1.0, c}};
  return tf;
}

TransferFunction blob_tf(const volume::GridVolume& v) {
  const auto r = volume::compute_range(v);
  return default_transfer_function(r.vmin[0], r.vmax[0], 0.3);
}

Camera small_camera(int px = 32) {
  Camera c;
  c.width = px;
  c.height = px;
  return c;
}

std::vector<Ray> random_rays(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  std::vector<Ray> out;
  while (static_cast<int>(out.size()) < n) {
    const Vec3 o(u(rng) * 3 - 1, u(rng) * 3 - 1, u(rng) * 3 - 1);
    const Vec3 target(u(rng), u(rng), u(rng));
    if ((target - o).norm() < 1e-3) continue;
    out.push_back({o, (target - o).normalized()});
  }
  return out;
}

auto grid_sampler(const volume::GridVolume& v) { return grid_parts(v)[0].sample; }

}  // namespace

TEST(Camera, CentreRayLooksAtTarget) {
  Camera c;
  c.width = 65;
  c.height = 65;
  const Ray r = c.ray(32, 32);
  EXPECT_NEAR((r.dir - (c.look_at - c.position).normalized()).norm(), 0.0, 1e-12);
  const Ray top = c.ray(32, 0);
  EXPECT_GT(top.dir.dot(c.up), r.dir.dot(c.up));
}

TEST(Camera, DegenerateBasisRejected) {
  Camera c;
  c.up = c.look_at - c.position;
  EXPECT_THROW(c.validate(), ConfigError);
  c = Camera{};
  c.fov_deg = 180.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Camera, InsideBoxStartsAtZero) {
  const Box3 b{Vec3::Zero(), Vec3::Ones()};
  const Interval iv = intersect({Vec3(0.5, 0.5, 0.5), Vec3(1, 0, 0)}, b);
  EXPECT_EQ(iv.t_in, 0.0);
  EXPECT_DOUBLE_EQ(iv.t_out, 0.5);
  EXPECT_TRUE(intersect({Vec3(2, 2, 2), Vec3(1, 0, 0)}, b).empty());
}

TEST(TransferFunction, PiecewiseLinearLookup) {
  TransferFunction tf;
  tf.points = {{0.0, {0, 0, 0, 0}}, {0.5, {1, 0, 0, 0.5}}, {1.0, {1, 1, 1, 1}}};
  tf.opacity_scale = 0.5;
  const Rgba c = tf(0.25);
  EXPECT_DOUBLE_EQ(c.r, 0.5);
  EXPECT_DOUBLE_EQ(c.a, 0.125);
  EXPECT_DOUBLE_EQ(tf(2.0).a, 0.5);
  EXPECT_DOUBLE_EQ(tf.corrected_alpha(0.3, tf.base_step), 0.3);
}

TEST(TransferFunction, MaxAlphaIsExact) {
  TransferFunction tf = default_transfer_function(0.0, 1.0, 0.3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  for (int trial = 0; trial < 200; ++trial) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    double dense = 0.0;
    for (int i = 0; i <= 2000; ++i) dense = std::max(dense, tf(lo + (hi - lo) * i / 2000).a);
    EXPECT_GE(tf.max_alpha(lo, hi), dense - 1e-15);
    EXPECT_LE(tf.max_alpha(lo, hi), dense + 1e-3);
  }
  EXPECT_EQ(tf.max_alpha(0.0, 0.3), 0.0);
}

TEST(TransferFunction, UnsortedPointsRejected) {
  TransferFunction tf;
  tf.points = {{0.6, {}}, {0.4, {}}};
  EXPECT_THROW(tf.validate(), ConfigError);
}

TEST(RayMarch, TransparentTransferFunctionGivesNothing) {
  const auto vol = blob_field(16);
  const auto tf = flat_tf({0.7, 0.2, 0.1, 0.0});
  for (const auto& ray : random_rays(50, 1)) {
    const Interval iv = intersect(ray, vol.bounds());
    const Fragment f = ray_march(grid_sampler(vol), ray, iv.t_in, iv.t_out, tf, {});
    EXPECT_EQ(f.r, 0.0);
    EXPECT_EQ(f.g, 0.0);
    EXPECT_EQ(f.b, 0.0);
    EXPECT_EQ(f.a, 0.0);
  }
}

TEST(RayMarch, SingleOpaqueSampleGivesItsColour) {
  const auto vol = constant_field(4, 0.5);
  const auto tf = flat_tf({0.3, 0.6, 0.9, 1.0});
  const Ray ray{Vec3(-0.5, 0.5, 0.5), Vec3(1, 0, 0)};
  MarchOptions opt;
  opt.early_exit = false;
  const Fragment f = ray_march(grid_sampler(vol), ray, 0.505, 0.515, tf, opt);
  EXPECT_DOUBLE_EQ(f.r, 0.3);
  EXPECT_DOUBLE_EQ(f.g, 0.6);
  EXPECT_DOUBLE_EQ(f.b, 0.9);
  EXPECT_DOUBLE_EQ(f.a, 1.0);
  const Fragment g = ray_march(grid_sampler(vol), ray, 0.5, 1.5, tf, opt);
  EXPECT_DOUBLE_EQ(g.r, 0.3);
  EXPECT_DOUBLE_EQ(g.a, 1.0);
}

TEST(RayMarch, StepHalvingConverges) {
  const auto vol = blob_field(32);
  const auto tf = blob_tf(vol);
  const Camera cam = small_camera(48);
  RenderOptions a, b;
  a.march.step = 0.01;
  b.march.step = 0.005;
  const Image ia = render_sort_last(grid_parts(vol), cam, tf, a);
  const Image ib = render_sort_last(grid_parts(vol), cam, tf, b);
  EXPECT_LT(max_abs_diff(ia, ib), 1e-2);
}

TEST(RayMarch, SplittingAnIntervalIsAssociative) {
  const auto vol = blob_field(24);
  auto tf = blob_tf(vol);
  tf.opacity_scale = 3.0;
  MarchOptions opt;
  opt.early_exit = false;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (const auto& ray : random_rays(300, 2)) {
    const Interval iv = intersect(ray, vol.bounds());
    if (iv.empty()) continue;
    const double tm = iv.t_in + u(rng) * (iv.t_out - iv.t_in);
    const Fragment whole = ray_march(grid_sampler(vol), ray, iv.t_in, iv.t_out, tf, opt);
    const Fragment split = composite(ray_march(grid_sampler(vol), ray, iv.t_in, tm, tf, opt),
                                     ray_march(grid_sampler(vol), ray, tm, iv.t_out, tf, opt));
    EXPECT_NEAR(whole.r, split.r, 1e-12);
    EXPECT_NEAR(whole.g, split.g, 1e-12);
    EXPECT_NEAR(whole.b, split.b, 1e-12);
    EXPECT_NEAR(whole.a, split.a, 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(SortLast, ArrivalOrderDoesNotMatter) {
  const auto vol = blob_field(32);
  const auto tf = blob_tf(vol);
  const auto dec = volume::decompose_domain(vol.dims(), {2, 2, 1}, 0, vol.mesh());
  const auto parts = grid_parts(vol, dec);
  RenderOptions opt;
  const Image ref = render_sort_last(parts, small_camera(), tf, opt);
  std::vector<int> order = {0, 1, 2, 3};
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    opt.arrival_order = order;
    EXPECT_TRUE(render_sort_last(parts, small_camera(), tf, opt) == ref);
  }
}

TEST(SortLast, PartitionedGridMatchesSingleBrick) {
  const auto vol = blob_field(32);
  const auto tf = blob_tf(vol);
  RenderOptions opt;
  opt.march.early_exit = false;
  const Image one = render_sort_last(grid_parts(vol), small_camera(), tf, opt);
  const auto dec = volume::decompose_domain(vol.dims(), {2, 1, 2}, 0, vol.mesh());
  const Image four = render_sort_last(grid_parts(vol, dec), small_camera(), tf, opt);
  EXPECT_LT(max_abs_diff(one, four), 1e-12);
}

TEST(SortLast, AlphaStaysInUnitRange) {
  const auto vol = blob_field(24);
  auto tf = blob_tf(vol);
  tf.opacity_scale = 50.0;
  const Image img = render_sort_last(grid_parts(vol), small_camera(), tf);
  for (std::size_t i = 3; i < img.rgba.size(); i += 4) {
    EXPECT_GE(img.rgba[i], 0.0);
    EXPECT_LE(img.rgba[i], 1.0);
  }
}

TEST(MacroCells, ProbedValuesLieInsideCellRanges) {
  const auto vol = blob_field(32);
  const auto sample = grid_sampler(vol);
  const int res = 8, probes = 4;
  const auto cells = build_macrocells(sample, vol.bounds(), res, probes, 0.0);
  // re-probe each cell independently on its own 4^3 lattice
  for (int k = 0; k < res; ++k)
    for (int j = 0; j < res; ++j)
      for (int i = 0; i < res; ++i) {
        const Box3 b = cells.cell_box({i, j, k});
        const std::size_t c = cells.index(i, j, k);
        for (int pk = 0; pk < probes; ++pk)
          for (int pj = 0; pj < probes; ++pj)
            for (int pi = 0; pi < probes; ++pi) {
              const double v = sample(MacroCellGrid::probe_position(b, probes, pi, pj, pk));
              EXPECT_GE(v, cells.vmin[c] - 1e-12);
              EXPECT_LE(v, cells.vmax[c] + 1e-12);
            }
      }
}

TEST(MacroCells, ConstantFieldHasPaddedZeroWidthRanges) {
  const auto vol = constant_field(8, 0.25);
  const auto cells = build_macrocells(grid_sampler(vol), vol.bounds(), 16, 4, kMacroCellEpsilon);
  for (std::size_t c = 0; c < cells.cell_count(); ++c) {
    EXPECT_DOUBLE_EQ(cells.vmin[c], 0.25 - kMacroCellEpsilon);
    EXPECT_DOUBLE_EQ(cells.vmax[c], 0.25 + kMacroCellEpsilon);
  }
}

TEST(MacroCells, SkippingLeavesTheImageUnchanged) {
  const auto vol = blob_field(32);
  const auto tf = blob_tf(vol);
  const auto span = volume::compute_range(vol);
  auto cells = build_macrocells(grid_sampler(vol), vol.bounds(), 16, 4,
                                kMacroCellEpsilon * (span.vmax[0] - span.vmin[0]));
  auto parts = grid_parts(vol);
  parts[0].cells = &cells;
  RenderOptions with, without;
  without.use_macrocells = false;
  RenderStats sw, so;
  const Image a = render_sort_last(parts, small_camera(48), tf, with, &sw);
  const Image b = render_sort_last(parts, small_camera(48), tf, without, &so);
  EXPECT_LT(max_abs_diff(a, b), 1e-6);
  EXPECT_GT(sw.march.skipped_cells, 0u);
  EXPECT_LT(sw.march.samples, so.march.samples);
}

TEST(Image, PngRoundTripsThroughZlib) {
  Image img(3, 2);
  for (std::size_t i = 0; i < img.rgba.size(); ++i) img.rgba[i] = static_cast<double>(i % 5) / 4.0;
  const std::string png = encode_png(img);
  ASSERT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  // IHDR directly follows the signature
  EXPECT_EQ(png.substr(12, 4), "IHDR");
  const std::size_t idat = png.find("IDAT");
  ASSERT_NE(idat, std::string::npos);
  const auto be32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(png[at + i]);
    return v;
  };
  const std::uint32_t len = be32(idat - 4);
  const std::string body = png.substr(idat, 4 + len);
  EXPECT_EQ(be32(idat + 4 + len), static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(body.data()), body.size())));
  std::string raw(2 * (1 + 4 * 3), '\0');
  uLongf rlen = raw.size();
  ASSERT_EQ(uncompress(reinterpret_cast<Bytef*>(raw.data()), &rlen, reinterpret_cast<const Bytef*>(png.data() + idat + 4), len), Z_OK);
  ASSERT_EQ(rlen, raw.size());
  EXPECT_EQ(raw[0], 0);
  EXPECT_EQ(static_cast<unsigned char>(raw[1]), to_byte(img.rgba[0]));
  EXPECT_EQ(static_cast<unsigned char>(raw[1 + 4 * 3 + 1 + 3]), to_byte(img.pixel(0, 1)[3]));
}

TEST(Image, PpmHasHeaderAndRgbBytes) {
  Image img(4, 3);
  const auto path = std::filesystem::temp_directory_path() / "dnr_test_image.ppm";
  write_image(path, img);
  std::ifstream is(path, std::ios::binary);
  std::string all((std::istreambuf_iterator<char>(is)), {});
  const std::string header = "P6\n4 3\n255\n";
  EXPECT_EQ(all.substr(0, header.size()), header);
  EXPECT_EQ(all.size(), header.size() + 4 * 3 * 3);
}

// --- pathlines ---

namespace {

volume::GridVolume vector_field(Index3 dims, const Box3& box, const std::function<Vec3(const Vec3&)>& f) {
  volume::UniformMesh m;
  m.origin = box.lo;
  for (int a = 0; a < 3; ++a) m.spacing[a] = (box.hi[a] - box.lo[a]) / (dims[a] - 1);
  return volume::GridVolume::from_function(dims, m, 3, [&](const Vec3& x, std::span<double> out) {
    const Vec3 v = f(x);
    for (int c = 0; c < 3; ++c) out[c] = v[c];
  });
}

volume::GridVolume negated(volume::GridVolume g) {
  for (auto& v : g.values()) v = -v;
  return g;
}

GridSequence steady(const volume::GridVolume& g, const std::vector<double>& times) {
  return GridSequence(times, std::vector<volume::GridVolume>(times.size(), g));
}

/// Reversed and negated copy, built by hand.
GridSequence mirrored(const std::vector<double>& times, const std::vector<volume::GridVolume>& grids) {
  std::vector<double> t(times.rbegin(), times.rend());
  std::vector<volume::GridVolume> g;
  for (auto it = grids.rbegin(); it != grids.rend(); ++it) g.push_back(negated(*it));
  return GridSequence(t, g);
}

Vec3 swirl(const Vec3& x) { return {-(x[1] - 0.5) + 0.1 * x[2], (x[0] - 0.5), 0.2 * std::sin(3 * x[0])}; }

}  // namespace

TEST(Rk4, ConstantFieldIsExact) {
  auto v = [](const Vec3&, double, Vec3& out) {
    out = Vec3(1, 0, 0);
    return true;
  };
  const auto p = rk4_step(v, Vec3::Zero(), 0.0, 0.1);
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ((*p)[0], 0.1);
  EXPECT_EQ((*p)[1], 0.0);
}

TEST(Rk4, ZeroFieldLeavesPointInPlace) {
  auto v = [](const Vec3&, double, Vec3& out) {
    out = Vec3::Zero();
    return true;
  };
  const Vec3 p0(0.3, 0.4, 0.5);
  EXPECT_EQ(*rk4_step(v, p0, 1.0, 0.25), p0);
}

TEST(Rk4, LinearFieldLocalErrorIsFifthOrder) {
  auto v = [](const Vec3& p, double, Vec3& out) {
    out = Vec3(p[0], 0, 0);
    return true;
  };
  double prev = 0.0;
  for (double dt : {0.2, 0.1, 0.05}) {
    const double err = std::abs((*rk4_step(v, Vec3(1, 0, 0), 0.0, dt))[0] - std::exp(dt));
    EXPECT_LT(err, dt * dt * dt * dt * dt / 100.0);
    if (prev > 0) {
      EXPECT_NEAR(std::log2(prev / err), 5.0, 0.3);
    }
    prev = err;
  }
}

TEST(Rk4, OutOfDomainStageStopsTheStep) {
  auto v = [](const Vec3& p, double, Vec3& out) {
    out = Vec3(1, 0, 0);
    return p[0] <= 1.0;
  };
  EXPECT_FALSE(rk4_step(v, Vec3(0.95, 0, 0), 0.0, 0.1));
}

TEST(Pathlines, GlobalErrorOnLinearFieldIsFourthOrder) {
  // trilinear interpolation reproduces V = (x, 0, 0) exactly, so only the integrator errs
  const Box3 box{Vec3(0, -1, -1), Vec3(4, 1, 1)};
  const auto g = vector_field({9, 3, 3}, box, [](const Vec3& x) { return Vec3(x[0], 0, 0); });
  const auto w = steady(g, {0.0, 1.0});
  std::vector<double> errs;
  for (double dt : {0.2, 0.1, 0.05, 0.025}) {
    const auto lines = trace_pathlines(w, {Vec3(1, 0, 0)}, {dt, 1000});
    ASSERT_EQ(lines[0].reason, Termination::WindowExhausted);
    errs.push_back(std::abs(lines[0].vertices.back().x[0] - std::exp(1.0)));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_NEAR(std::log2(errs[i - 1] / errs[i]), 4.0, 0.3);
}

TEST(Pathlines, BackwardOverMirroredWindowMatchesNegativeStepOracle) {
  const Box3 box{Vec3::Zero(), Vec3::Ones()};
  const auto g = vector_field({17, 17, 17}, box, swirl);
  const std::vector<double> times = {0.0, 0.1, 0.2, 0.3};
  const auto w = mirrored(times, std::vector<volume::GridVolume>(times.size(), g));
  const double dt = 0.025;
  const std::vector<Vec3> seeds = {Vec3(0.5, 0.3, 0.5), Vec3(0.4, 0.6, 0.2), Vec3(0.6, 0.5, 0.7)};
  const auto lines = trace_pathlines(w, seeds, {dt, 1000});
  auto oracle_v = [&](const Vec3& p, double, Vec3& out) { return grid_velocity(g, p, out); };
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto& l = lines[s];
    ASSERT_EQ(l.reason, Termination::WindowExhausted);
    ASSERT_EQ(l.vertices.size(), 13u);
    Vec3 p = seeds[s];
    double t = 0.3;
    for (std::size_t k = 1; k < l.vertices.size(); ++k) {
      p = *rk4_step(oracle_v, p, t, -dt);
      t -= dt;
      EXPECT_LT((l.vertices[k].x - p).norm(), 1e-10);
      EXPECT_NEAR(l.vertices[k].t, t, 1e-12);
      EXPECT_LT(l.vertices[k].t, l.vertices[k - 1].t);
    }
  }
}

TEST(Pathlines, ForwardTimesIncrease) {
  const Box3 box{Vec3::Zero(), Vec3::Ones()};
  const auto g = vector_field({9, 9, 9}, box, swirl);
  const auto lines = trace_pathlines(steady(g, {0.0, 0.07, 0.2}), {Vec3(0.5, 0.4, 0.5)}, {0.03, 1000});
  const auto& v = lines[0].vertices;
  for (std::size_t k = 1; k < v.size(); ++k) EXPECT_GT(v[k].t, v[k - 1].t);
  EXPECT_DOUBLE_EQ(v.back().t, 0.2);
}

TEST(Pathlines, AtMostTwoGridsResident) {
  const Box3 box{Vec3::Zero(), Vec3::Ones()};
  const auto g = vector_field({5, 5, 5}, box, swirl);
  TraceStats st;
  trace_pathlines(steady(g, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}), {Vec3(0.5, 0.5, 0.5), Vec3(0.3, 0.3, 0.3)}, {0.02, 1000},
                  &st);
  EXPECT_EQ(st.decodes, 6);
  EXPECT_EQ(st.max_resident, 2);
  EXPECT_EQ(st.peak_resident_bytes, 2 * g.values().size() * sizeof(double));
}

TEST(Pathlines, TerminationReasons) {
  const Box3 box{Vec3::Zero(), Vec3::Ones()};
  const auto g = vector_field({5, 5, 5}, box, [](const Vec3&) { return Vec3(1, 0, 0); });
  const auto w = steady(g, {0.0, 0.5});
  const auto lines = trace_pathlines(w, {Vec3(0.2, 0.5, 0.5), Vec3(0.8, 0.5, 0.5), Vec3(1.5, 0.5, 0.5)}, {0.05, 1000});
  EXPECT_EQ(lines[0].reason, Termination::WindowExhausted);
  EXPECT_NEAR(lines[0].vertices.back().x[0], 0.7, 1e-12);
  EXPECT_EQ(lines[1].reason, Termination::OutOfDomain);
  EXPECT_EQ(lines[2].reason, Termination::OutOfDomain);
  EXPECT_TRUE(lines[2].vertices.empty());
  EXPECT_EQ(trace_pathlines(w, {Vec3(0.2, 0.5, 0.5)}, {0.05, 3})[0].reason, Termination::MaxSteps);
}

TEST(Pathlines, SeedsLeavingTheDomainBackwardAreDropped) {
  const Box3 box{Vec3::Zero(), Vec3::Ones()};
  const auto g = vector_field({5, 5, 5}, box, [](const Vec3&) { return Vec3(1, 0, 0); });
  const std::vector<double> times = {0.0, 0.25, 0.5};
  const std::vector<volume::GridVolume> grids(3, g);
  const auto back = trace_pathlines(mirrored(times, grids), {Vec3(0.2, 0.5, 0.5), Vec3(0.8, 0.5, 0.5)}, {0.05, 1000});
  const auto survivors = surviving_endpoints(back);
  ASSERT_EQ(survivors.size(), 1u);
  EXPECT_EQ(survivors[0].id, 1);
  const auto fwd = trace_pathlines(GridSequence(times, grids), survivors, {0.05, 1000});
  ASSERT_EQ(fwd.size(), 1u);
  EXPECT_EQ(fwd[0].seed_id, 1);
  EXPECT_NEAR(fwd[0].vertices.back().x[0], 0.8, 1e-12);
}

TEST(Pathlines, RejectsEmptyAndScalarWindows) {
  EXPECT_THROW(trace_pathlines(GridSequence({}, {}), std::vector<Vec3>{}, {}), ConfigError);
  const auto s = constant_field(4, 1.0);
  EXPECT_THROW(trace_pathlines(steady(s, {0.0, 1.0}), {Vec3(0.5, 0.5, 0.5)}, {}), ConfigError);
}

TEST(Pathlines, CsvHasOneRowPerVertex) {
  const Box3 box{Vec3::Zero(), Vec3::Ones()};
  const auto g = vector_field({5, 5, 5}, box, swirl);
  const auto lines = trace_pathlines(steady(g, {0.0, 0.1}), {Vec3(0.5, 0.5, 0.5), Vec3(0.4, 0.5, 0.5)}, {0.05, 100});
  const auto path = std::filesystem::temp_directory_path() / "dnr_test_lines.csv";
  write_pathlines_csv(path, lines);
  std::ifstream is(path);
  std::string line;
  int rows = 0;
  std::getline(is, line);
  EXPECT_EQ(line, "seed_id,step,x,y,z,t,speed");
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 6);
  EXPECT_EQ(pathline_summary(lines)["seeds"][1]["termination"], "window-exhausted");
}
