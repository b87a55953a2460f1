#include "mclf/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "mclf/error.hpp"
#include "mclf/image_io.hpp"
#include "mclf/random.hpp"

namespace mclf {
namespace {

using Polygon = std::vector<std::pair<double, double>>;

struct ClassLook {
  Polygon outline;               // unit length along +x, centred at the origin
  std::array<double, 3> colour;  // visible hull colour
  double hull_heat;              // thermal level of the hull itself
};

const ClassLook& look(VesselClass c) {
  // cargo long and low, speedboat short and bright
  static const std::array<ClassLook, 4> looks{{
      {{{-0.5, -0.11}, {0.35, -0.11}, {0.5, 0.0}, {0.35, 0.11}, {-0.5, 0.11}}, {0.55, 0.25, 0.20}, 0.40},
      {{{-0.5, -0.2}, {0.2, -0.2}, {0.5, 0.0}, {0.2, 0.2}, {-0.5, 0.2}}, {0.85, 0.85, 0.80}, 0.42},
      {{{-0.5, -0.175}, {0.4, -0.175}, {0.5, -0.1}, {0.5, 0.1}, {0.4, 0.175}, {-0.5, 0.175}},
       {0.60, 0.55, 0.30},
       0.38},
      {{{-0.5, -0.175}, {0.1, -0.175}, {0.5, 0.0}, {0.1, 0.175}, {-0.5, 0.175}}, {0.95, 0.95, 0.95}, 0.45},
  }};
  return looks.at(static_cast<std::size_t>(c) - 1);
}

std::pair<double, double> to_image(const Vessel& v, double u, double w) {
  const double c = std::cos(v.heading), s = std::sin(v.heading);
  return {v.x + v.scale * (c * u - s * w), v.y + v.scale * (s * u + c * w)};
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

// Sum of a few seeded sinusoids, roughly in [-1, 1].
struct Waves {
  std::array<double, 3> fx, fy, phase, amp;

  explicit Waves(Rng& rng) {
    for (std::size_t k = 0; k < 3; ++k) {
      fx[k] = rng.uniform(0.05, 0.6);
      fy[k] = rng.uniform(0.2, 1.2);
      phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      amp[k] = rng.uniform(0.2, 0.4);
    }
  }
  double operator()(double x, double y) const {
    double v = 0.0;
    for (std::size_t k = 0; k < 3; ++k) v += amp[k] * std::sin(fx[k] * x + fy[k] * y + phase[k]);
    return v;
  }
};

Tensor box_blur3(const Tensor& img) {
  const std::size_t H = img.dim(1), W = img.dim(2);
  Tensor out(img.shape());
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      double acc = 0.0;
      int n = 0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          const long y = static_cast<long>(i) + di, x = static_cast<long>(j) + dj;
          if (y < 0 || x < 0 || y >= static_cast<long>(H) || x >= static_cast<long>(W)) continue;
          acc += img(0, y, x);
          ++n;
        }
      out(0, i, j) = acc / n;
    }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string index_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%04zu", i);
  return buf;
}

}  // namespace

std::string_view to_string(VesselClass c) {
  switch (c) {
    case VesselClass::cargo_ship: return "cargo-ship";
    case VesselClass::fishing_boat: return "fishing-boat";
    case VesselClass::sand_dredger: return "sand-dredger";
    case VesselClass::speedboat: return "speedboat";
  }
  return "?";
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::normal: return "normal";
    case Regime::foggy: return "foggy";
    case Regime::low_light: return "low-light";
    case Regime::reflection: return "reflection";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::normal, Regime::foggy, Regime::low_light, Regime::reflection})
    if (to_string(r) == name) return r;
  throw ConfigError("unknown regime '" + std::string(name) + "'");
}

Polygon hull_polygon(const Vessel& v) {
  Polygon out;
  for (const auto& [u, w] : look(v.cls).outline) out.push_back(to_image(v, u, w));
  return out;
}

bool inside_polygon(const Polygon& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto [xi, yi] = poly[i];
    const auto [xj, yj] = poly[j];
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

void validate(const SceneSpec& spec) {
  if (spec.height == 0 || spec.width == 0) throw SpecError("empty canvas");
  if (!(spec.strength >= 0.0 && spec.strength <= 1.0)) {
    throw SpecError("degradation strength " + std::to_string(spec.strength) + " outside [0, 1]");
  }
  for (std::size_t k = 0; k < spec.vessels.size(); ++k) {
    const Vessel& v = spec.vessels[k];
    const int id = static_cast<int>(v.cls);
    if (id < 1 || id > 4) throw SpecError("vessel " + std::to_string(k) + ": class id " + std::to_string(id));
    if (!(v.scale > 0.0) || !std::isfinite(v.heading) || !(v.hotspot >= 0.0 && v.hotspot <= 1.0)) {
      throw SpecError("vessel " + std::to_string(k) + ": bad scale, heading or hotspot");
    }
    // hulls are convex, so the vertices bound them
    for (const auto& [x, y] : hull_polygon(v)) {
      if (!(x >= 0.0 && y >= 0.0 && x <= static_cast<double>(spec.width - 1) &&
            y <= static_cast<double>(spec.height - 1))) {
        throw SpecError("vessel " + std::to_string(k) + " leaves the canvas");
      }
    }
  }
}

LabeledSample render_clean(const SceneSpec& spec) {
  validate(spec);
  const std::size_t H = spec.height, W = spec.width;
  Rng rng(spec.seed, fnv1a64("sea"));
  const Waves vis_waves(rng), ir_waves(rng);

  Tensor vis({3, H, W}), ir({1, H, W}), mask({H, W}, 0.0);
  static constexpr std::array<double, 3> sea_tint{0.55, 0.85, 1.0};
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      const double x = static_cast<double>(j), y = static_cast<double>(i);
      const double ramp = W > 1 ? x / static_cast<double>(W - 1) : 0.0;
      const double level = 0.30 + 0.15 * ramp + 0.04 * vis_waves(x, y);
      for (std::size_t c = 0; c < 3; ++c) vis(c, i, j) = clip01(level * sea_tint[c]);
      ir(0, i, j) = clip01(0.22 + 0.03 * ir_waves(x, y));
    }

  // painter's order: later hulls cover earlier ones, in every modality alike
  for (const Vessel& v : spec.vessels) {
    const Polygon poly = hull_polygon(v);
    const ClassLook& lk = look(v.cls);
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        if (!inside_polygon(poly, static_cast<double>(j), static_cast<double>(i))) continue;
        mask(i, j) = static_cast<double>(v.cls);
        for (std::size_t c = 0; c < 3; ++c) vis(c, i, j) = lk.colour[c];
        ir(0, i, j) = lk.hull_heat;
      }
  }
  // engine heat near the stern
  for (const Vessel& v : spec.vessels) {
    const auto [cx, cy] = to_image(v, -0.35, 0.0);
    const double sigma = std::max(1.0, 0.12 * v.scale);
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        const double dx = static_cast<double>(j) - cx, dy = static_cast<double>(i) - cy;
        ir(0, i, j) = clip01(ir(0, i, j) + v.hotspot * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
      }
  }

  LabeledSample s{{std::move(vis), std::move(ir), mask}, mask, spec};
  return s;
}

LabeledSample degrade(const LabeledSample& sample) {
  LabeledSample out = sample;
  const SceneSpec& spec = sample.spec;
  const double s = spec.strength;
  Tensor& vis = out.pair.visible;
  Tensor& ir = out.pair.infrared;
  const std::size_t H = vis.dim(1), W = vis.dim(2);
  Rng rng(spec.seed, fnv1a64("degrade"));

  switch (spec.regime) {
    case Regime::normal: break;
    case Regime::foggy: {
      // far rows (top) get the most haze
      for (std::size_t i = 0; i < H; ++i) {
        const double depth = H > 1 ? 1.0 - static_cast<double>(i) / static_cast<double>(H - 1) : 1.0;
        const double t = s * depth;
        for (std::size_t c = 0; c < 3; ++c)
          for (std::size_t j = 0; j < W; ++j) vis(c, i, j) = (1.0 - t) * vis(c, i, j) + t * kAirlight;
      }
      const Tensor blurred = box_blur3(ir);
      for (std::size_t k = 0; k < ir.size(); ++k) ir[k] = (1.0 - s) * ir[k] + s * blurred[k];
      break;
    }
    case Regime::low_light: {
      const double gain = 1.0 - 0.9 * s, sigma = 0.05 * s;
      for (std::size_t k = 0; k < vis.size(); ++k) vis[k] = clip01(vis[k] * gain + sigma * rng.normal());
      break;
    }
    case Regime::reflection: {
      const std::size_t patches = 2 + rng.index(3);
      for (std::size_t p = 0; p < patches; ++p) {
        const double cx = rng.uniform(0.0, static_cast<double>(W));
        const double cy = rng.uniform(0.3, 1.0) * static_cast<double>(H);
        const double a = std::max(1.0, rng.uniform(0.05, 0.15) * static_cast<double>(W));
        const double b = std::max(0.5, a * rng.uniform(0.2, 0.5));
        const double peak = s * rng.uniform(0.4, 0.8);
        for (std::size_t i = 0; i < H; ++i)
          for (std::size_t j = 0; j < W; ++j) {
            const double u = (static_cast<double>(j) - cx) / a, w = (static_cast<double>(i) - cy) / b;
            const double glare = peak * std::max(0.0, 1.0 - (u * u + w * w));
            for (std::size_t c = 0; c < 3; ++c) vis(c, i, j) = std::min(1.0, vis(c, i, j) + glare);
          }
      }
      break;
    }
  }
  if (spec.thermal_noise) {
    Rng noise(spec.seed, fnv1a64("thermal"));
    for (std::size_t k = 0; k < ir.size(); ++k) ir[k] = clip01(ir[k] + 0.02 * s * noise.normal());
  }
  return out;
}

SceneSpec random_scene(std::uint64_t seed, std::size_t height, std::size_t width, Regime regime, double strength) {
  if (std::min(height, width) < 24) throw SpecError("canvas smaller than 24 pixels cannot host a vessel");
  SceneSpec spec;
  spec.seed = seed;
  spec.height = height;
  spec.width = width;
  spec.regime = regime;
  spec.strength = strength;

  Rng rng(seed, fnv1a64("scene"));
  const double extent = static_cast<double>(std::min(height, width));
  const std::size_t wanted = 1 + rng.index(3);
  for (int attempt = 0; attempt < 200 && spec.vessels.size() < wanted; ++attempt) {
    Vessel v;
    v.cls = static_cast<VesselClass>(1 + rng.index(4));
    const double lo = std::max(16.0, 0.25 * extent), hi = std::max(lo, 0.45 * extent);
    v.scale = v.cls == VesselClass::speedboat ? lo : rng.uniform(lo, hi);
    v.heading = rng.uniform(-0.6, 0.6) + (rng.uniform() < 0.5 ? 0.0 : std::numbers::pi);
    v.x = rng.uniform(0.0, static_cast<double>(width - 1));
    v.y = rng.uniform(0.0, static_cast<double>(height - 1));
    v.hotspot = v.cls == VesselClass::speedboat ? rng.uniform(0.5, 0.7) : rng.uniform(0.25, 0.5);

    bool fits = true;
    for (const auto& [x, y] : hull_polygon(v))
      fits = fits && x >= 0.0 && y >= 0.0 && x <= static_cast<double>(width - 1) &&
             y <= static_cast<double>(height - 1);
    for (const Vessel& o : spec.vessels)
      fits = fits && std::hypot(o.x - v.x, o.y - v.y) > 0.5 * (o.scale + v.scale) + 2.0;
    if (fits) spec.vessels.push_back(v);
  }
  if (spec.vessels.empty()) throw SpecError("could not place a vessel");
  return spec;
}

std::uint64_t sample_seed(std::uint64_t master, std::size_t index) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

Dataset generate_dataset(std::size_t n, const DatasetConfig& config) {
  if (n == 0) throw ConfigError("dataset size must be at least 1");
  static constexpr std::array<Regime, 4> cycle{Regime::normal, Regime::foggy, Regime::low_light, Regime::reflection};
  if (config.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*config.out_dir, ec);
    if (ec || !std::filesystem::is_directory(*config.out_dir)) {
      throw IoError("cannot create output directory " + config.out_dir->string());
    }
  }

  Dataset ds;
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = sample_seed(config.seed, i);
    Rng pick(seed, fnv1a64("strength"));
    const double strength = config.strength ? *config.strength : pick.uniform(0.3, 0.9);
    SceneSpec spec = random_scene(seed, config.height, config.width, config.regime.value_or(cycle[i % 4]), strength);
    spec.thermal_noise = config.thermal_noise;
    LabeledSample sample = degrade(render_clean(spec));

    const std::string vis = encode_pnm(sample.pair.visible, ImageKind::ppm_rgb);
    const std::string ir = encode_pnm(sample.pair.infrared, ImageKind::pgm_gray);
    const std::string mask = encode_pnm(sample.mask, ImageKind::pgm_mask);
    const std::string stem = index_name(i);
    const std::string vis_name = stem + "_vis.ppm", ir_name = stem + "_ir.pgm", mask_name = stem + "_mask.pgm";
    if (config.out_dir) {
      write_file(*config.out_dir / vis_name, vis);
      write_file(*config.out_dir / ir_name, ir);
      write_file(*config.out_dir / mask_name, mask);
    }

    nlohmann::ordered_json vessels = nlohmann::ordered_json::array();
    for (const Vessel& v : spec.vessels) {
      vessels.push_back({{"class", to_string(v.cls)},
                         {"class_id", static_cast<int>(v.cls)},
                         {"x", v.x},
                         {"y", v.y},
                         {"scale", v.scale},
                         {"heading", v.heading},
                         {"hotspot", v.hotspot}});
    }
    samples.push_back({{"index", i},
                       {"seed", seed},
                       {"regime", to_string(spec.regime)},
                       {"strength", spec.strength},
                       {"thermal_noise", spec.thermal_noise},
                       {"vessels", vessels},
                       {"files", {{"visible", vis_name}, {"infrared", ir_name}, {"mask", mask_name}}},
                       {"hash", hex64(fnv1a64(vis + ir + mask))}});
    ds.samples.push_back(std::move(sample));
  }

  nlohmann::ordered_json manifest;
  manifest["seed"] = config.seed;
  manifest["height"] = config.height;
  manifest["width"] = config.width;
  manifest["count"] = n;
  manifest["samples"] = samples;
  ds.manifest = manifest.dump(2) + "\n";
  if (config.out_dir) {
    ds.manifest_path = *config.out_dir / "manifest.json";
    write_file(*ds.manifest_path, ds.manifest);
  }
  return ds;
}

}  // namespace mclf
