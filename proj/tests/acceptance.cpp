// One PASS/FAIL line per release criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "mclf/blocks.hpp"
#include "mclf/commands.hpp"
#include "mclf/freq.hpp"
#include "mclf/image_io.hpp"
#include "mclf/losses.hpp"
#include "mclf/metrics.hpp"
#include "mclf/pipeline.hpp"
#include "mclf/synthetic.hpp"

using namespace mclf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  if (!o.ok) ++failures;
  std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << "\n";
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Tensor random_tensor(std::mt19937_64& gen, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(gen);
  return t;
}

Tensor random_labels(std::mt19937_64& gen, Shape shape, std::size_t K) {
  std::uniform_int_distribution<std::size_t> u(0, K - 1);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = static_cast<double>(u(gen));
  return t;
}

bool in_unit(const Tensor& t) {
  for (double v : t.data())
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

double worst_row_error(const Tensor& a) {
  const std::size_t M = a.shape().back();
  double worst = 0.0;
  for (std::size_t r = 0; r < a.size() / M; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += a[r * M + j];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

// central differences on `coords` random coordinates; piecewise-linear kinks are
// detected by disagreeing one-sided slopes and skipped
struct FdResult {
  std::size_t checked = 0, skipped = 0;
  double worst = 0.0;
};

FdResult central_differences(const std::function<double(const Tensor&)>& f, const Tensor& grad, const Tensor& x,
                             std::size_t coords, std::mt19937_64& gen, bool skip_kinks) {
  const double h = 1e-5;
  FdResult r;
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), gen);
  const double f0 = f(x);
  for (std::size_t i : order) {
    if (r.checked == coords) break;
    Tensor xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fp = f(xp), fm = f(xm);
    if (skip_kinks && std::abs((fp - f0) - (f0 - fm)) / h > 1e-6) {
      ++r.skipped;
      continue;
    }
    r.worst = std::max(r.worst, rel_err(grad[i], (fp - fm) / (2 * h)));
    ++r.checked;
  }
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mclf_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

int main() {
  std::mt19937_64 gen(20261019);

  report("dwt_perfect_reconstruction", [&] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (Shape s : {Shape{1, 1, 4, 4}, Shape{1, 3, 8, 12}, Shape{1, 4, 32, 32}, Shape{2, 4, 16, 32}}) {
      const Tensor x = random_tensor(gen, s);
      worst = std::max(worst, max_abs_diff(idwt2(dwt2(x)), x));
    }
    const double secs = seconds_since(t0);
    return Outcome{worst < 1e-8 && secs < 1.0, "max |dx| " + num(worst) + ", " + num(secs) + " s"};
  });

  report("haar_energy", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor x = random_tensor(gen, {1, 4, 32, 32});
      const SubbandSet s = dwt2(x);
      auto energy = [](const Tensor& t) {
        double e = 0.0;
        for (double v : t.data()) e += v * v;
        return e;
      };
      double e = energy(s.approx);
      for (const auto& level : s.details)
        for (const Tensor& band : level) e += energy(band);
      worst = std::max(worst, std::abs(e - energy(x)));
    }
    return Outcome{worst < 1e-8, "max |energy difference| " + num(worst)};
  });

  report("fft_parseval", [&] {
    const std::size_t N = 8;
    double worst_bin = 0.0, worst_parseval = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor x = random_tensor(gen, {1, 1, N, N});
      const Spectrum s = rfft2(x);
      double time_energy = 0.0, freq_energy = 0.0, scale = 0.0, bin = 0.0;
      for (double v : x.data()) time_energy += v * v;
      for (std::size_t u = 0; u < N; ++u)
        for (std::size_t v = 0; v < N; ++v) {
          std::complex<double> acc = 0.0;
          for (std::size_t a = 0; a < N; ++a)
            for (std::size_t b = 0; b < N; ++b)
              acc += x(0, 0, a, b) * std::polar(1.0, -2.0 * std::numbers::pi * double(u * a + v * b) / double(N));
          freq_energy += std::norm(acc);
          scale = std::max(scale, std::abs(acc));
          if (v <= N / 2) {
            const std::complex<double> lib = std::polar(s.magnitude(0, 0, u, v), s.phase(0, 0, u, v));
            bin = std::max(bin, std::abs(lib - acc));
          }
        }
      worst_bin = std::max(worst_bin, bin / scale);
      // half spectrum energy, interior columns counted twice
      double half_energy = 0.0;
      for (std::size_t u = 0; u < N; ++u)
        for (std::size_t v = 0; v <= N / 2; ++v) {
          const double m = s.magnitude(0, 0, u, v);
          half_energy += (v == 0 || v == N / 2 ? 1.0 : 2.0) * m * m;
        }
      worst_parseval = std::max({worst_parseval, std::abs(half_energy / (N * N) - time_energy) / time_energy,
                                 std::abs(freq_energy / (N * N) - time_energy) / time_energy});
    }
    return Outcome{worst_bin < 1e-6 && worst_parseval < 1e-6,
                   "bin rel err " + num(worst_bin) + ", Parseval rel err " + num(worst_parseval)};
  });

  report("fft_refine_identity", [&] {
    double worst = 0.0;
    for (Shape s : {Shape{1, 4, 8, 8}, Shape{1, 4, 12, 20}, Shape{1, 2, 5, 7}}) {
      const Tensor x = random_tensor(gen, s);
      worst = std::max(worst, max_abs_diff(fft_refine(x, FftRefineParams::identity(s[1])), x));
    }
    return Outcome{worst < 1e-8, "max |dx| " + num(worst)};
  });

  report("attention_rows_and_gates", [&] {
    const std::size_t C = 8;
    double worst = 0.0;
    bool gates_ok = true;
    for (std::uint64_t k = 0; k < 100; ++k) {
      const ParamSet ps(1000 + k);
      const Tensor xv = random_tensor(gen, {1, C, 4, 8}), xi = random_tensor(gen, {1, C, 4, 8});
      AttentionTrace tr;
      const GmiaOutput g = gmia(xv, xi, GmiaParams::random(ps, "gmia", C, 2), &tr);
      for (const Tensor& a : tr.attention) worst = std::max(worst, worst_row_error(a));
      for (const Tensor& gt : tr.gates) gates_ok = gates_ok && in_unit(gt);

      const FsecTrace ft = fsec_trace(xv, xi, FsecParams::random(ps, "fsec", C, 4));
      gates_ok = gates_ok && in_unit(ft.hybrid.gate.values) && in_unit(ft.hybrid.m_v) && in_unit(ft.hybrid.m_i);
      gates_ok = gates_ok && in_unit(channel_attention_gate(xv, ChannelAttnParams::random(ps, "ca", C)));

      SvcaTrace st;
      svca(g.fused, SvcaParams::random(ps, "svca", C), &st);
      worst = std::max(worst, worst_row_error(st.attention));
      gates_ok = gates_ok && in_unit(st.m_h) && in_unit(st.m_w) && in_unit(st.gate.values);
    }
    return Outcome{worst <= 1e-9 && gates_ok,
                   "worst |row sum - 1| " + num(worst) + (gates_ok ? ", gates in [0,1]" : ", gate out of [0,1]")};
  });

  report("fsec_gate_endpoint", [&] {
    FsecParams p = FsecParams::random(ParamSet(7), "fsec", 8, 4);
    p.hybrid.gate_w.setZero();
    p.hybrid.gate_b.setConstant(1000.0);
    const FsecTrace t = fsec_trace(random_tensor(gen, {1, 8, 8, 8}), random_tensor(gen, {1, 8, 8, 8}), p);
    const bool ok = t.out.ev == t.yi && t.out.ei == t.yv;
    return Outcome{ok, ok ? "E^V == Y^I and E^I == Y^V bitwise" : "enhanced outputs differ from swapped inputs"};
  });

  report("svca_identity_and_bound", [&] {
    SvcaParams p = SvcaParams::random(ParamSet(7), "svca", 8);
    p.norm.scale.setZero();
    p.norm.shift.setConstant(1000.0);
    const Tensor x = random_tensor(gen, {1, 8, 8, 12});
    const auto [mh, mw] = svca_axis_gates(x, p);
    const bool identity = svca_recalibrate(x, mh, mw) == x;
    bool bound = true;
    for (std::uint64_t k = 0; k < 50; ++k) {
      const Tensor y = random_tensor(gen, {1, 8, 6, 10}, -5.0, 5.0);
      const auto [h, w] = svca_axis_gates(y, SvcaParams::random(ParamSet(k), "svca", 8));
      const Tensor r = svca_recalibrate(y, h, w);
      for (std::size_t i = 0; i < y.size(); ++i) bound = bound && std::abs(r[i]) <= std::abs(y[i]);
    }
    return Outcome{identity && bound, std::string(identity ? "X' == X" : "X' != X") +
                                          (bound ? ", |X'| <= |X| on 50 inputs" : ", bound violated")};
  });

  report("focal_collapses_to_cross_entropy", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t K = 2 + static_cast<std::size_t>(trial % 5), H = 6, W = 7, P = H * W;
      const Tensor z = random_tensor(gen, {K, H, W}, -6.0, 6.0);
      const Tensor t = random_labels(gen, {H, W}, K);
      double ce = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        double zmax = -1e300, sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) zmax = std::max(zmax, z[k * P + p]);
        for (std::size_t k = 0; k < K; ++k) sum += std::exp(z[k * P + p] - zmax);
        ce += std::log(sum) + zmax - z[static_cast<std::size_t>(t[p]) * P + p];
      }
      worst = std::max(worst, std::abs(focal_loss(z, t, {1.0, 0.0}).value - ce / double(P)));
    }
    return Outcome{worst < 1e-12, "max |focal - CE| " + num(worst)};
  });

  report("soft_iou_perfect", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor t = random_labels(gen, {8, 8}, 5);
      Tensor probs({5, 8, 8});
      for (std::size_t p = 0; p < 64; ++p) probs[static_cast<std::size_t>(t[p]) * 64 + p] = 1.0;
      worst = std::max(worst, iou_loss(probs, t, 1e-6).value);
    }
    return Outcome{worst < 1e-5, "max loss " + num(worst)};
  });

  report("loss_gradients", [&] {
    const auto t0 = Clock::now();
    const Tensor z = random_tensor(gen, {5, 8, 8}, -2.0, 2.0);
    const Tensor t = random_labels(gen, {8, 8}, 5);
    const FdResult focal = central_differences([&](const Tensor& a) { return focal_loss(a, t).value; },
                                               focal_loss(z, t).grad, z, 64, gen, false);
    const Tensor probs = random_tensor(gen, {5, 8, 8}, 0.1, 0.9);
    const FdResult iou = central_differences([&](const Tensor& a) { return iou_loss(a, t).value; },
                                             iou_loss(probs, t).grad, probs, 64, gen, false);
    const ImagePair pair{random_tensor(gen, {3, 12, 12}, 0.0, 1.0), random_tensor(gen, {1, 12, 12}, 0.0, 1.0),
                         std::nullopt};
    const Tensor fused = random_tensor(gen, {1, 12, 12}, 0.0, 1.0);
    const FdResult fus = central_differences([&](const Tensor& a) { return fusion_loss(FusedImage{a}, pair).value; },
                                             fusion_loss(FusedImage{fused}, pair).grad.reshape(fused.shape()), fused,
                                             64, gen, true);
    const double secs = seconds_since(t0);
    const bool ok = focal.checked >= 64 && iou.checked >= 64 && fus.checked >= 64 && focal.worst < 1e-4 &&
                    iou.worst < 1e-4 && fus.worst < 1e-4 && secs < 30.0;
    return Outcome{ok, "focal " + num(focal.worst) + ", iou " + num(iou.worst) + ", fusion " + num(fus.worst) + " (" +
                           std::to_string(fus.skipped) + " kinks skipped), " + num(secs) + " s"};
  });

  report("total_loss_identities", [&] {
    bool ok = true;
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int k = 0; k < 1000; ++k) {
      const LossParts p{u(gen), u(gen), u(gen)};
      const LossReport r = total_loss(p);
      const double seg = p.focal + p.iou;
      ok = ok && r.seg == seg && r.total == seg + 0.1 * p.fus;
    }
    const Model model{PipelineConfig{}};
    const LabeledSample s = degrade(render_clean(random_scene(3, 64, 64, Regime::foggy, 0.5)));
    const PipelineOutput out = run_pipeline(model, s.pair);
    const LossReport r = evaluate_losses(out.seg, out.fused, s.pair, model.config.loss);
    ok = ok && r.seg == r.focal + r.iou && r.total == r.seg + 0.1 * r.fus;
    return Outcome{ok, ok ? "seg == focal + iou, total == seg + 0.1 fus" : "identity broken"};
  });

  report("end_to_end_determinism", [&] {
    const fs::path dir = scratch("e2e");
    DatasetConfig dc;
    dc.seed = 7;
    dc.out_dir = dir / "ds";
    generate_dataset(1, dc);
    const auto t0 = Clock::now();
    std::ostringstream sink;
    std::string bytes[2][2];
    for (int k = 0; k < 2; ++k) {
      RunOptions opt;
      opt.config.seed = 7;
      opt.config.out_dir = (dir / ("run" + std::to_string(k))).string();
      opt.visible = dir / "ds" / "sample_0000_vis.ppm";
      opt.infrared = dir / "ds" / "sample_0000_ir.pgm";
      if (cmd_run(opt, sink, sink) != kExitOk) return Outcome{false, "cmd_run failed: " + sink.str()};
      bytes[k][0] = read_file(fs::path(opt.config.out_dir) / "pred-mask.pgm");
      bytes[k][1] = read_file(fs::path(opt.config.out_dir) / "fused.pgm");
    }
    const double secs = seconds_since(t0);
    fs::remove_all(dir);
    const bool same = bytes[0][0] == bytes[1][0] && bytes[0][1] == bytes[1][1] && !bytes[0][0].empty();
    return Outcome{same && secs < 10.0, std::string(same ? "identical outputs" : "outputs differ") + ", two runs in " +
                                            num(secs) + " s"};
  });

  report("pipeline_shape_contract", [&] {
    const Model model{PipelineConfig{}};
    std::string detail;
    bool ok = true;
    for (auto [H, W] : {std::pair<std::size_t, std::size_t>{32, 32}, {32, 64}, {64, 32}, {64, 64}, {64, 96}, {96, 64},
                        {32, 128}}) {
      const ImagePair pair{random_tensor(gen, {3, H, W}, 0.0, 1.0), random_tensor(gen, {1, H, W}, 0.0, 1.0),
                           std::nullopt};
      const PipelineOutput out = run_pipeline(model, pair);
      const bool here = out.seg.classes.shape() == Shape{H, W} && out.fused.pixels.shape() == Shape{1, H, W} &&
                        in_unit(out.fused.pixels);
      ok = ok && here;
      detail += (detail.empty() ? "" : " ") + std::to_string(H) + "x" + std::to_string(W) + (here ? "" : "!");
    }
    return Outcome{ok, detail};
  });

  report("degradation_label_invariance", [&] {
    std::uniform_real_distribution<double> strength(0.0, 1.0);
    std::size_t cases = 0;
    bool ok = true;
    for (std::uint64_t k = 0; k < 32; ++k)
      for (Regime r : {Regime::normal, Regime::foggy, Regime::low_light, Regime::reflection}) {
        SceneSpec spec = random_scene(gen(), 64, 32 + 32 * (k % 3), r, strength(gen));
        spec.thermal_noise = k % 2 == 1;
        const LabeledSample clean = render_clean(spec);
        const LabeledSample d = degrade(clean);
        ok = ok && encode_pnm(clean.mask, ImageKind::pgm_mask) == encode_pnm(d.mask, ImageKind::pgm_mask) &&
             d.pair.mask && *d.pair.mask == clean.mask;
        ++cases;
      }
    return Outcome{ok, std::to_string(cases) + " spec/regime cases"};
  });

  report("metric_oracle", [&] {
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t K = 5;
      const Tensor pred = random_labels(gen, {8, 8}, K), truth = random_labels(gen, {8, 8}, K);
      const EvalResult r = iou_eval(pred, truth, K, trial % 2 == 0);
      double sum = 0.0;
      std::size_t defined = 0;
      for (std::size_t c = 0; c < K; ++c) {
        std::uint64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t p = 0; p < 64; ++p) {
          const bool pc = pred[p] == double(c), tc = truth[p] == double(c);
          tp += pc && tc;
          fp += pc && !tc;
          fn += !pc && tc;
        }
        ok = ok && r.counts[c] == ClassCounts{tp, fp, fn};
        if (tp + fp + fn == 0) {
          ok = ok && !r.iou[c];
          continue;
        }
        const double iou = double(tp) / double(tp + fp + fn);
        ok = ok && r.iou[c] == iou;
        if (c > 0 || trial % 2 == 0) {
          sum += iou;
          ++defined;
        }
      }
      ok = ok && r.miou && *r.miou == sum / double(defined);
    }
    return Outcome{ok, ok ? "20 mask pairs match pixel counts exactly" : "mismatch against pixel counts"};
  });

  report("io_roundtrip", [&] {
    const fs::path dir = scratch("io");
    bool mask_ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Tensor mask = random_labels(gen, {9, 13}, 256);
      write_image(dir / "m.pgm", mask, ImageKind::pgm_mask);
      mask_ok = mask_ok && read_image(dir / "m.pgm", ImageKind::pgm_mask) == mask;
      const Tensor rgb = random_tensor(gen, {3, 9, 13}, 0.0, 1.0);
      write_image(dir / "c.ppm", rgb, ImageKind::ppm_rgb);
      worst = std::max(worst, max_abs_diff(read_image(dir / "c.ppm", ImageKind::ppm_rgb), rgb));
    }
    fs::remove_all(dir);
    return Outcome{mask_ok && worst <= 1.0 / 510.0,
                   std::string(mask_ok ? "masks exact" : "mask changed") + ", image max |d| " + num(worst)};
  });

  report("selftest_passes", [&] {
    std::ostringstream out, err;
    const int code = cmd_selftest(SelftestCommandOptions{}, out, err);
    return Outcome{code == kExitOk, "exit " + std::to_string(code) + (err.str().empty() ? "" : ", " + err.str())};
  });

  return failures;
}
