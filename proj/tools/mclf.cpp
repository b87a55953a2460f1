// mclf: generate synthetic pairs, run the pipeline, evaluate masks, self-test.

#include <cstdlib>
#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "mclf/commands.hpp"
#include "mclf/error.hpp"
#include "mclf/image_io.hpp"

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string size;
  std::string config;
  std::string out;
  bool swap = false;
};

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--seed", c.seed, "master seed (falls back to $MCLF_SEED, then 7)");
  sub.add_option("--size", c.size, "image size HxW, multiples of 32");
  sub.add_option("--config", c.config, "flat JSON config file")->check(CLI::ExistingFile);
  sub.add_option("--out", c.out, "output directory");
  sub.add_flag("--swap-enhance-base", c.swap, "keep each modality as the base of its own enhanced feature");
}

mclf::PipelineConfig build_config(const Common& c) {
  mclf::PipelineConfig cfg;
  if (const char* env = std::getenv("MCLF_SEED")) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw mclf::ConfigError(std::string("MCLF_SEED is not an unsigned integer: ") + env);
    }
  }
  if (!c.config.empty()) {
    try {
      cfg = mclf::PipelineConfig::from_json(mclf::read_file(c.config), cfg);
    } catch (const mclf::ParseError& e) {
      throw mclf::ConfigError(c.config + ": " + e.what());
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.size.empty()) {
    static const std::regex re(R"((\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(c.size, m, re)) throw mclf::ConfigError("--size expects HxW, got '" + c.size + "'");
    cfg.height = std::stoul(m[1]);
    cfg.width = std::stoul(m[2]);
  }
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.swap) cfg.swap_enhance_base = true;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-spatial infrared/visible fusion and segmentation on synthetic maritime scenes"};
  app.require_subcommand(1);

  Common common;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(*gen, common);
  mclf::GenOptions gen_opt;
  std::string regime;
  std::optional<double> strength;
  gen->add_option("--n", gen_opt.n, "number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--regime", regime, "force one regime")
      ->check(CLI::IsMember({"normal", "foggy", "low-light", "reflection"}));
  gen->add_option("--strength", strength, "degradation strength")->check(CLI::Range(0.0, 1.0));
  gen->add_flag("--thermal-noise", gen_opt.thermal_noise, "add Gaussian noise to the infrared channel");

  auto* run = app.add_subcommand("run", "run the pipeline on a registered pair");
  add_common(*run, common);
  mclf::RunOptions run_opt;
  std::string mask;
  run->add_option("visible", run_opt.visible, "visible image (P6)")->required()->check(CLI::ExistingFile);
  run->add_option("infrared", run_opt.infrared, "infrared image (P5)")->required()->check(CLI::ExistingFile);
  run->add_option("--mask", mask, "truth mask (P5); enables losses.json")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "per-class IoU of predicted masks");
  mclf::EvalOptions eval_opt;
  std::string eval_out;
  eval->add_option("pred-dir", eval_opt.pred_dir, "predicted masks")->required();
  eval->add_option("truth-dir", eval_opt.truth_dir, "truth masks")->required();
  eval->add_option("--classes", eval_opt.classes, "class count")->check(CLI::Range(2, 256));
  eval->add_flag("--include-background", eval_opt.include_background, "count class 0 in the mean");
  eval->add_option("--out", eval_out, "also write metrics.json here");

  auto* self = app.add_subcommand("selftest", "run the invariant suite");
  add_common(*self, common);
  mclf::SelftestCommandOptions self_opt;
  self->add_flag("--corrupt-gradient", self_opt.selftest.corrupt_gradient)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? mclf::kExitOk : mclf::kExitUsage;
  }

  try {
    if (*gen) {
      gen_opt.config = build_config(common);
      if (!regime.empty()) gen_opt.regime = mclf::parse_regime(regime);
      gen_opt.strength = strength;
      return mclf::cmd_gen(gen_opt, std::cout, std::cerr);
    }
    if (*run) {
      run_opt.config = build_config(common);
      if (!mask.empty()) run_opt.mask = mask;
      return mclf::cmd_run(run_opt, std::cout, std::cerr);
    }
    if (*eval) {
      if (!eval_out.empty()) eval_opt.out_dir = eval_out;
      return mclf::cmd_eval(eval_opt, std::cout, std::cerr);
    }
    self_opt.selftest.config = build_config(common);
    if (!common.out.empty()) self_opt.out_dir = common.out;
    return mclf::cmd_selftest(self_opt, std::cout, std::cerr);
  } catch (const mclf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mclf::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mclf::kExitFailure;
  }
}
