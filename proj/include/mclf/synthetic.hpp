#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mclf/image.hpp"
#include "mclf/tensor.hpp"

namespace mclf {

/// Mask ids; 0 is sea.
enum class VesselClass : int { cargo_ship = 1, fishing_boat = 2, sand_dredger = 3, speedboat = 4 };
enum class Regime { normal, foggy, low_light, reflection };

inline constexpr double kAirlight = 0.8;

std::string_view to_string(VesselClass c);
std::string_view to_string(Regime r);
/// Accepts "normal", "foggy", "low-light", "reflection". Throws ConfigError otherwise.
Regime parse_regime(std::string_view name);

struct Vessel {
  VesselClass cls = VesselClass::cargo_ship;
  double x = 0.0, y = 0.0;  // hull centre, pixel coordinates (column, row)
  double scale = 16.0;      // hull length in pixels
  double heading = 0.0;     // radians, 0 = bow pointing towards +x
  double hotspot = 0.5;     // peak thermal excess of the engine blob
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t height = 64, width = 64;
  std::vector<Vessel> vessels;
  Regime regime = Regime::normal;
  double strength = 0.0;  // in [0, 1]
  bool thermal_noise = false;
};

struct LabeledSample {
  ImagePair pair;  // pair.mask mirrors `mask`
  Tensor mask;     // H x W class ids
  SceneSpec spec;
};

/// Hull outline in image coordinates. Every hull shape is convex.
std::vector<std::pair<double, double>> hull_polygon(const Vessel& v);
/// Even-odd test. Pixel (row i, column j) is sampled at (j, i).
bool inside_polygon(const std::vector<std::pair<double, double>>& poly, double x, double y);

/// Throws SpecError when a hull leaves the canvas or a field is out of range.
void validate(const SceneSpec& spec);

LabeledSample render_clean(const SceneSpec& spec);
/// Applies spec.regime at spec.strength. The mask is never touched.
LabeledSample degrade(const LabeledSample& sample);

/// Random scene with 1 to 3 non-overlapping vessels.
SceneSpec random_scene(std::uint64_t seed, std::size_t height, std::size_t width, Regime regime, double strength);

struct DatasetConfig {
  std::uint64_t seed = 0;
  std::size_t height = 64, width = 64;
  std::optional<Regime> regime;     // unset: cycle through all four by index
  std::optional<double> strength;   // unset: drawn per sample in [0.3, 0.9]
  bool thermal_noise = false;
  std::optional<std::filesystem::path> out_dir;  // unset: nothing is written
};

struct Dataset {
  std::vector<LabeledSample> samples;
  std::string manifest;  // JSON text
  std::optional<std::filesystem::path> manifest_path;
};

std::uint64_t sample_seed(std::uint64_t master, std::size_t index);

/// n >= 1, otherwise ConfigError.
Dataset generate_dataset(std::size_t n, const DatasetConfig& config);

}  // namespace mclf
