#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "mclf/pipeline.hpp"
#include "mclf/selftest.hpp"
#include "mclf/synthetic.hpp"

namespace mclf {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct GenOptions {
  PipelineConfig config;  // seed, size and out_dir are used
  std::size_t n = 8;
  std::optional<Regime> regime;
  std::optional<double> strength;
  bool thermal_noise = false;
};

struct RunOptions {
  PipelineConfig config;
  std::filesystem::path visible, infrared;
  std::optional<std::filesystem::path> mask;
};

struct EvalOptions {
  std::filesystem::path pred_dir, truth_dir;
  std::size_t classes = 5;
  bool include_background = false;
  std::optional<std::filesystem::path> out_dir;
};

struct SelftestCommandOptions {
  SelftestOptions selftest;
  std::optional<std::filesystem::path> out_dir;
};

/// Writes the dataset under config.out_dir and prints the manifest path.
int cmd_gen(const GenOptions& opt, std::ostream& out, std::ostream& err);

/// Writes pred-mask.pgm, fused.pgm and, with a mask, losses.json under
/// config.out_dir. Inputs of any size are zero-padded to multiples of 32 and
/// the outputs cropped back.
int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);

/// Pairs truth masks (*.pgm with "mask" in the name) with same-named files in
/// pred_dir and sums the confusion counts over all pairs before taking IoU.
/// Unpaired or mismatched files are skipped with a warning.
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);

/// Prints the JSON report; exit 0 iff every check passes.
int cmd_selftest(const SelftestCommandOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace mclf
