#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mclf/synthetic.hpp"

using namespace mclf;
namespace fs = std::filesystem;

namespace {

SceneSpec one_ship(Regime regime = Regime::normal, double strength = 0.0) {
  SceneSpec s;
  s.seed = 11;
  s.vessels.push_back(Vessel{VesselClass::cargo_ship, 32.0, 30.0, 24.0, 0.3, 0.5});
  s.regime = regime;
  s.strength = strength;
  return s;
}

// 4-connected components of pixels equal to `id`
std::size_t components(const Tensor& mask, double id) {
  const std::size_t H = mask.dim(0), W = mask.dim(1);
  std::vector<char> seen(H * W, 0);
  std::size_t count = 0;
  for (std::size_t start = 0; start < H * W; ++start) {
    if (seen[start] || mask[start] != id) continue;
    ++count;
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
      const std::size_t p = q.front();
      q.pop();
      const std::size_t y = p / W, x = p % W;
      const std::size_t nb[4] = {y > 0 ? p - W : p, y + 1 < H ? p + W : p, x > 0 ? p - 1 : p, x + 1 < W ? p + 1 : p};
      for (std::size_t n : nb)
        if (!seen[n] && mask[n] == id) {
          seen[n] = 1;
          q.push(n);
        }
    }
  }
  return count;
}

LabeledSample constant_sample(double v, Regime regime, double strength) {
  LabeledSample s;
  s.spec.seed = 3;
  s.spec.regime = regime;
  s.spec.strength = strength;
  s.pair.visible = Tensor({3, 64, 64}, v);
  s.pair.infrared = Tensor({1, 64, 64}, 0.4);
  s.mask = Tensor({64, 64});
  s.pair.mask = s.mask;
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mclf_synth_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(RenderTest, EmptySceneHasEmptyMask) {
  SceneSpec s;
  const LabeledSample out = render_clean(s);
  EXPECT_EQ(max_abs(out.mask), 0.0);
  EXPECT_EQ(out.pair.visible.shape(), (Shape{3, 64, 64}));
  EXPECT_EQ(out.pair.infrared.shape(), (Shape{1, 64, 64}));
}

TEST(RenderTest, SingleCargoShipIsOneComponent) {
  const LabeledSample out = render_clean(one_ship());
  std::set<double> ids(out.mask.data().begin(), out.mask.data().end());
  EXPECT_EQ(ids, (std::set<double>{0.0, 1.0}));
  EXPECT_EQ(components(out.mask, 1.0), 1u);
  ASSERT_TRUE(out.pair.mask.has_value());
  EXPECT_EQ(*out.pair.mask, out.mask);
}

TEST(RenderTest, MaskMatchesPolygonTest) {
  const SceneSpec s = one_ship();
  const LabeledSample out = render_clean(s);
  const auto poly = hull_polygon(s.vessels[0]);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x)
      ASSERT_EQ(out.mask(y, x) == 1.0, inside_polygon(poly, double(x), double(y))) << y << "," << x;
}

TEST(RenderTest, InsidePolygonSquare) {
  const std::vector<std::pair<double, double>> sq{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  EXPECT_TRUE(inside_polygon(sq, 2, 2));
  EXPECT_FALSE(inside_polygon(sq, 5, 2));
  EXPECT_FALSE(inside_polygon(sq, 2, -0.5));
}

TEST(RenderTest, Deterministic) {
  const SceneSpec s = random_scene(99, 64, 96, Regime::reflection, 0.7);
  const LabeledSample a = degrade(render_clean(s)), b = degrade(render_clean(s));
  EXPECT_EQ(a.pair.visible, b.pair.visible);
  EXPECT_EQ(a.pair.infrared, b.pair.infrared);
  EXPECT_EQ(a.mask, b.mask);
}

TEST(RenderTest, OutOfCanvasAndBadFields) {
  SceneSpec s = one_ship();
  s.vessels[0].x = 2.0;
  EXPECT_THROW(render_clean(s), SpecError);
  s = one_ship();
  s.strength = 1.5;
  EXPECT_THROW(validate(s), SpecError);
  EXPECT_THROW(random_scene(1, 16, 16, Regime::normal, 0.5), SpecError);
}

TEST(DegradeTest, ZeroStrengthIsIdentity) {
  const LabeledSample clean = render_clean(one_ship());
  for (Regime r : {Regime::normal, Regime::foggy, Regime::low_light, Regime::reflection}) {
    LabeledSample s = clean;
    s.spec.regime = r;
    s.spec.strength = 0.0;
    const LabeledSample d = degrade(s);
    EXPECT_EQ(d.pair.visible, clean.pair.visible) << to_string(r);
    EXPECT_EQ(d.pair.infrared, clean.pair.infrared) << to_string(r);
  }
}

TEST(DegradeTest, FullFogReachesAirlightAtTopRow) {
  const LabeledSample d = degrade(constant_sample(0.1, Regime::foggy, 1.0));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t x = 0; x < 64; ++x) EXPECT_EQ(d.pair.visible(c, 0, x), kAirlight);
  EXPECT_NEAR(d.pair.visible(0, 63, 0), 0.1, 1e-15);
}

TEST(DegradeTest, LowLightMeanScale) {
  const LabeledSample d = degrade(constant_sample(0.5, Regime::low_light, 0.5));
  double mean = 0.0;
  for (double v : d.pair.visible.data()) mean += v;
  mean /= double(d.pair.visible.size());
  EXPECT_NEAR(mean, 0.5 * 0.55, 2e-3);
  EXPECT_EQ(d.pair.infrared, Tensor({1, 64, 64}, 0.4));
}

TEST(DegradeTest, RangeAndLabelInvariance) {
  for (std::uint64_t seed = 0; seed < 12; ++seed)
    for (Regime r : {Regime::foggy, Regime::low_light, Regime::reflection}) {
      SceneSpec spec = random_scene(seed, 64, 64, r, 1.0);
      spec.thermal_noise = true;
      const LabeledSample clean = render_clean(spec);
      const LabeledSample d = degrade(clean);
      EXPECT_EQ(d.mask, clean.mask);
      for (const Tensor* t : {&d.pair.visible, &d.pair.infrared})
        for (double v : t->data()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    }
}

TEST(DatasetTest, CyclesRegimesAndWritesManifest) {
  const fs::path dir = scratch("cycle");
  DatasetConfig cfg;
  cfg.seed = 5;
  cfg.out_dir = dir;
  const Dataset ds = generate_dataset(4, cfg);
  ASSERT_EQ(ds.samples.size(), 4u);
  std::set<Regime> seen;
  for (const auto& s : ds.samples) seen.insert(s.spec.regime);
  EXPECT_EQ(seen.size(), 4u);
  ASSERT_TRUE(ds.manifest_path.has_value());
  std::ifstream in(*ds.manifest_path);
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["count"], 4);
  EXPECT_EQ(j["samples"].size(), 4u);
  for (const auto& s : j["samples"])
    for (const auto& f : s["files"]) EXPECT_TRUE(fs::exists(dir / f.get<std::string>())) << f;
  fs::remove_all(dir);
}

TEST(DatasetTest, RegenerationGivesIdenticalHashes) {
  DatasetConfig cfg;
  cfg.seed = 21;
  const auto a = nlohmann::json::parse(generate_dataset(6, cfg).manifest);
  const auto b = nlohmann::json::parse(generate_dataset(6, cfg).manifest);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(a["samples"][i]["hash"], b["samples"][i]["hash"]);
  cfg.seed = 22;
  const auto c = nlohmann::json::parse(generate_dataset(6, cfg).manifest);
  EXPECT_NE(a["samples"][0]["hash"], c["samples"][0]["hash"]);
}

TEST(DatasetTest, Errors) {
  EXPECT_THROW(generate_dataset(0, DatasetConfig{}), ConfigError);
  const fs::path file = scratch("blocker");
  std::ofstream(file) << "x";
  DatasetConfig cfg;
  cfg.out_dir = file / "sub";
  EXPECT_THROW(generate_dataset(1, cfg), IoError);
  fs::remove(file);
}

TEST(DatasetTest, SampleSeedsDiffer) {
  std::set<std::uint64_t> s;
  for (std::size_t i = 0; i < 100; ++i) s.insert(sample_seed(7, i));
  EXPECT_EQ(s.size(), 100u);
  EXPECT_EQ(parse_regime("low-light"), Regime::low_light);
  EXPECT_THROW(parse_regime("rain"), ConfigError);
}
