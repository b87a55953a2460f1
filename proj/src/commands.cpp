#include "mclf/commands.hpp"

#include <algorithm>
#include <vector>

#include "mclf/error.hpp"
#include "mclf/image_io.hpp"
#include "mclf/metrics.hpp"

namespace mclf {
namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

Tensor crop_hw(const Tensor& t, std::size_t H, std::size_t W) {
  const std::size_t r = t.rank();
  return slice(slice(t, r - 2, 0, H), r - 1, 0, W);
}

}  // namespace

int cmd_gen(const GenOptions& opt, std::ostream& out, std::ostream&) {
  opt.config.validate();
  DatasetConfig dc;
  dc.seed = opt.config.seed;
  dc.height = opt.config.height;
  dc.width = opt.config.width;
  dc.regime = opt.regime;
  dc.strength = opt.strength;
  dc.thermal_noise = opt.thermal_noise;
  dc.out_dir = opt.config.out_dir;
  const Dataset ds = generate_dataset(opt.n, dc);
  out << ds.manifest_path->string() << "\n";
  return kExitOk;
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream&) {
  ImagePair pair{read_image(opt.visible, ImageKind::ppm_rgb), read_image(opt.infrared, ImageKind::pgm_gray),
                 std::nullopt};
  if (opt.mask) pair.mask = read_image(*opt.mask, ImageKind::pgm_mask);
  pair.validate();
  const std::size_t H = pair.height(), W = pair.width();

  const Model model(opt.config);
  const PipelineOutput res = run_pipeline(model, pad_pair(pair));
  const SegMap seg{crop_hw(res.seg.classes, H, W), crop_hw(res.seg.logits, H, W)};
  const FusedImage fused{crop_hw(res.fused.pixels, H, W)};

  const fs::path dir = opt.config.out_dir;
  ensure_dir(dir);
  write_image(dir / "pred-mask.pgm", seg.classes, ImageKind::pgm_mask);
  write_image(dir / "fused.pgm", fused.pixels, ImageKind::pgm_gray);
  out << (dir / "pred-mask.pgm").string() << "\n" << (dir / "fused.pgm").string() << "\n";
  if (pair.mask) {
    const LossReport r = evaluate_losses(seg, fused, pair, opt.config.loss);
    write_file(dir / "losses.json", loss_report_json(r));
    out << (dir / "losses.json").string() << "\n";
  }
  return kExitOk;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(opt.truth_dir)) throw IoError("not a directory: " + opt.truth_dir.string());
  if (!fs::is_directory(opt.pred_dir)) throw IoError("not a directory: " + opt.pred_dir.string());

  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(opt.truth_dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".pgm" && name.find("mask") != std::string::npos) {
      names.push_back(e.path().filename());
    }
  }
  std::sort(names.begin(), names.end());

  std::vector<ClassCounts> total(opt.classes);
  std::size_t used = 0, skipped = 0;
  for (const fs::path& name : names) {
    const fs::path pred_path = opt.pred_dir / name;
    if (!fs::is_regular_file(pred_path)) {
      err << "warning: no prediction for " << name.string() << ", skipped\n";
      ++skipped;
      continue;
    }
    try {
      const Tensor truth = read_image(opt.truth_dir / name, ImageKind::pgm_mask);
      const Tensor pred = read_image(pred_path, ImageKind::pgm_mask);
      accumulate(total, confusion_counts(pred, truth, opt.classes));
      ++used;
    } catch (const Error& e) {
      err << "warning: " << name.string() << ": " << e.what() << ", skipped\n";
      ++skipped;
    }
  }
  if (used == 0) {
    err << "error: no evaluable pairs (" << skipped << " skipped)\n";
    return kExitFailure;
  }
  const EvalResult r = summarize(std::move(total), opt.include_background);
  const std::string json = metrics_json(r);
  if (opt.out_dir) {
    ensure_dir(*opt.out_dir);
    write_file(*opt.out_dir / "metrics.json", json);
  }
  out << json;
  return kExitOk;
}

int cmd_selftest(const SelftestCommandOptions& opt, std::ostream& out, std::ostream& err) {
  const SelftestReport r = run_selftest(opt.selftest);
  const std::string json = r.to_json();
  if (opt.out_dir) {
    ensure_dir(*opt.out_dir);
    write_file(*opt.out_dir / "selftest.json", json);
  }
  out << json;
  for (const CheckResult& c : r.checks)
    if (!c.passed) err << "FAILED " << c.name << ": " << c.detail << "\n";
  return r.passed() ? kExitOk : kExitFailure;
}

}  // namespace mclf
