#include "mclf/selftest.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mclf/image_io.hpp"
#include "mclf/metrics.hpp"
#include "mclf/random.hpp"
#include "mclf/synthetic.hpp"

namespace mclf {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

class Checks {
 public:
  void add(std::string name, bool ok, std::string detail) {
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  }
  template <class F>
  void run(const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, std::string("threw: ") + e.what());
    }
  }
  SelftestReport report;
};

Tensor random_map(Rng& rng, Shape shape) { return rng.uniform_tensor(std::move(shape), -1.0, 1.0); }

Tensor random_classes(Rng& rng, Shape shape, std::size_t classes) {
  Tensor t(std::move(shape));
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(rng.index(classes));
  return t;
}

bool unit(const Tensor& t) {
  for (double v : t.data())
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

// Sum of the softmax rows' deviation from 1 over every attention map of a trace.
double worst_row_sum(const AttentionTrace& tr) {
  double worst = 0.0;
  for (const Tensor& a : tr.attention) {
    const std::size_t M = a.shape().back();
    for (std::size_t r = 0; r < a.size() / M; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < M; ++j) s += a[r * M + j];
      worst = std::max(worst, std::abs(s - 1.0));
    }
  }
  return worst;
}

void transform_checks(Checks& c, Rng& rng) {
  c.run("dwt_reconstruction", [&] {
    const auto t0 = Clock::now();
    const Tensor x = random_map(rng, {1, 4, 32, 32});
    const double err = max_abs_diff(idwt2(dwt2(x, 2)), x);
    const double dt = seconds_since(t0);
    c.add("dwt_reconstruction", err < 1e-8 && dt < 1.0, "max |dx| " + fmt(err) + ", " + fmt(dt) + " s");
  });
  c.run("haar_energy", [&] {
    const Tensor x = random_map(rng, {1, 4, 32, 32});
    const SubbandSet s = dwt2(x, 2);
    double e = 0.0;
    for (double v : s.approx.data()) e += v * v;
    for (const auto& lvl : s.details)
      for (const Tensor& b : lvl)
        for (double v : b.data()) e += v * v;
    double e0 = 0.0;
    for (double v : x.data()) e0 += v * v;
    c.add("haar_energy", std::abs(e - e0) < 1e-8, "energy drift " + fmt(std::abs(e - e0)));
  });
  c.run("fft_parseval", [&] {
    const std::size_t N = 8;
    const Tensor x = random_map(rng, {1, 1, N, N});
    const Spectrum s = rfft2(x);
    double worst = 0.0, spectral = 0.0, energy = 0.0;
    for (std::size_t u = 0; u < N; ++u)
      for (std::size_t v = 0; v <= N / 2; ++v) {
        std::complex<double> ref = 0.0;
        for (std::size_t m = 0; m < N; ++m)
          for (std::size_t n = 0; n < N; ++n)
            ref += x(0, 0, m, n) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(u * m + v * n) / N);
        const std::complex<double> got = std::polar(1.0, s.phase(0, 0, u, v)) * s.magnitude(0, 0, u, v);
        worst = std::max(worst, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
        const double w = (v == 0 || v == N / 2) ? 1.0 : 2.0;
        spectral += w * std::norm(got);
      }
    for (double v : x.data()) energy += v * v;
    const double parseval = std::abs(spectral / (N * N) - energy) / energy;
    c.add("fft_parseval", parseval < 1e-6 && worst < 1e-6,
          "parseval rel " + fmt(parseval) + ", vs naive dft " + fmt(worst));
  });
  c.run("fft_refine_identity", [&] {
    const Tensor x = random_map(rng, {1, 6, 12, 10});
    const double err = max_abs_diff(fft_refine(x, FftRefineParams::identity(6)), x);
    c.add("fft_refine_identity", err < 1e-8, "max |dx| " + fmt(err));
  });
}

void attention_checks(Checks& c, std::uint64_t seed) {
  c.run("attention_softmax_gates", [&] {
    double worst = 0.0;
    bool gates_ok = true;
    const std::size_t C = 8, heads = 2;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
      const ParamSet ps(splitmix64(seed + trial));
      Rng rng = ps.stream("inputs");
      const Tensor xv = random_map(rng, {1, C, 4, 4}), xi = random_map(rng, {1, C, 4, 4});
      const Tensor tv = to_tokens(xv), ti = to_tokens(xi);

      AttentionTrace tr;
      gated_self_attention(tv, SelfAttnParams::random(ps, "s", C, heads), &tr);
      gated_cross_attention(tv, ti, CrossAttnParams::random(ps, "x", C, heads), &tr);
      worst = std::max(worst, worst_row_sum(tr));
      for (const Tensor& g : tr.gates) gates_ok = gates_ok && unit(g);

      gates_ok = gates_ok && unit(channel_attention_gate(xv, ChannelAttnParams::random(ps, "ca", C)));
      const HybridAttention h = hybrid_attention(xi, xv, HybridParams::random(ps, "h", C));
      gates_ok = gates_ok && h.gate.in_unit_interval() && unit(h.m_i) && unit(h.m_v) && unit(h.channel_weights) &&
                 unit(h.spatial_weights);

      SvcaTrace st;
      svca(FusedFeature::from_map(xv), SvcaParams::random(ps, "sv", C), &st);
      gates_ok = gates_ok && unit(st.m_h) && unit(st.m_w) && st.gate.in_unit_interval();
      for (std::size_t r = 0; r < st.attention.size() / C; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < C; ++j) s += st.attention[r * C + j];
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    c.add("attention_softmax_rows", worst <= 1e-9, "worst |row sum - 1| " + fmt(worst) + " over 100 parameter sets");
    c.add("gates_unit_interval", gates_ok, gates_ok ? "all gates in [0,1]" : "a gate left [0,1]");
  });

  c.run("fsec_gate_endpoint", [&] {
    const std::size_t C = 8;
    const ParamSet ps(seed);
    Rng rng = ps.stream("fsec inputs");
    FsecParams p = FsecParams::random(ps, "fsec", C, 4);
    p.hybrid.gate_w.setZero();
    p.hybrid.gate_b.setConstant(1000.0);
    const FsecTrace t = fsec_trace(random_map(rng, {1, C, 8, 8}), random_map(rng, {1, C, 8, 8}), p);
    const bool ok = t.out.ev == t.yi && t.out.ei == t.yv;
    c.add("fsec_gate_endpoint", ok, ok ? "G = 1 gives E^V = Y^I, E^I = Y^V exactly" : "endpoint mismatch");
  });

  c.run("svca_identity", [&] {
    const std::size_t C = 8;
    const ParamSet ps(seed);
    Rng rng = ps.stream("svca inputs");
    SvcaParams p = SvcaParams::random(ps, "svca", C);
    p.norm.scale.setZero();
    p.norm.shift.setConstant(1000.0);
    const Tensor x = random_map(rng, {1, C, 6, 10});
    const auto [mh, mw] = svca_axis_gates(x, p);
    const bool ok = svca_recalibrate(x, mh, mw) == x;
    c.add("svca_identity", ok, ok ? "all-ones gates leave X bitwise unchanged" : "X changed");
  });

  c.run("svca_bound", [&] {
    const std::size_t C = 8;
    bool ok = true;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      const ParamSet ps(splitmix64(seed ^ (trial + 77)));
      Rng rng = ps.stream("svca inputs");
      const Tensor x = rng.uniform_tensor({1, C, 6, 10}, -5.0, 5.0);
      const auto [mh, mw] = svca_axis_gates(x, SvcaParams::random(ps, "svca", C));
      const Tensor xr = svca_recalibrate(x, mh, mw);
      for (std::size_t k = 0; k < x.size(); ++k) ok = ok && std::abs(xr[k]) <= std::abs(x[k]);
    }
    c.add("svca_bound", ok, ok ? "|X'| <= |X| elementwise" : "recalibration amplified an entry");
  });
}

void loss_checks(Checks& c, const SelftestOptions& opt, Rng& rng) {
  c.run("focal_ce_collapse", [&] {
    const std::size_t K = 5, H = 6, W = 7;
    const Tensor logits = rng.uniform_tensor({K, H, W}, -3.0, 3.0);
    const Tensor target = random_classes(rng, {H, W}, K);
    const double focal = focal_loss(logits, target, {1.0, 0.0}).value;
    double ce = 0.0;
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        double m = -INFINITY;
        for (std::size_t k = 0; k < K; ++k) m = std::max(m, logits(k, i, j));
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) z += std::exp(logits(k, i, j) - m);
        ce += m + std::log(z) - logits(static_cast<std::size_t>(target(i, j)), i, j);
      }
    ce /= static_cast<double>(H * W);
    c.add("focal_ce_collapse", std::abs(focal - ce) < 1e-12, "|focal - ce| " + fmt(std::abs(focal - ce)));
  });

  c.run("iou_perfect", [&] {
    const std::size_t K = 5;
    const Tensor target = random_classes(rng, {8, 8}, K);
    Tensor probs({K, 8, 8}, 0.0);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) probs(static_cast<std::size_t>(target(i, j)), i, j) = 1.0;
    const double v = iou_loss(probs, target, 1e-6).value;
    c.add("iou_perfect", v < 1e-5, "loss " + fmt(v));
  });

  c.run("gradient_checks", [&] {
    const auto t0 = Clock::now();
    auto reports = loss_gradient_checks(opt.config.seed, opt.corrupt_gradient);
    const double dt = seconds_since(t0);
    for (const GradCheckReport& r : reports) {
      c.add("gradcheck_" + r.loss, r.passed && dt < 30.0,
            std::to_string(r.coords_checked) + " coords, max rel err " + fmt(r.max_rel_err) + ", " +
                std::to_string(r.skipped_kinks) + " kinks skipped");
    }
    c.report.gradients = std::move(reports);
  });
}

ImagePair scene_pair(std::uint64_t seed, std::size_t H, std::size_t W) {
  DatasetConfig dc;
  dc.seed = seed;
  dc.height = H;
  dc.width = W;
  return generate_dataset(1, dc).samples.front().pair;
}

void pipeline_checks(Checks& c, const SelftestOptions& opt) {
  const Model model(opt.config);
  c.run("loss_identities", [&] {
    const ImagePair pair = scene_pair(opt.config.seed, 64, 64);
    const PipelineOutput out = run_pipeline(model, pair);
    const LossReport r = evaluate_losses(out.seg, out.fused, pair, opt.config.loss);
    const bool ok = r.seg == r.focal + r.iou && r.total == r.seg + kFusionWeight * r.fus;
    c.add("loss_identities", ok, "seg " + fmt(r.seg) + ", total " + fmt(r.total));
  });
  c.run("determinism", [&] {
    const auto t0 = Clock::now();
    const ImagePair pair = scene_pair(opt.config.seed, 64, 64);
    const PipelineOutput a = run_pipeline(model, pair);
    const double dt = seconds_since(t0);
    const PipelineOutput b = run_pipeline(Model(opt.config), pair);
    const bool ok = encode_pnm(a.seg.classes, ImageKind::pgm_mask) == encode_pnm(b.seg.classes, ImageKind::pgm_mask) &&
                    encode_pnm(a.fused.pixels, ImageKind::pgm_gray) == encode_pnm(b.fused.pixels, ImageKind::pgm_gray);
    c.add("determinism", ok && dt < 10.0, std::string(ok ? "byte-identical outputs" : "outputs differ") + ", " +
                                              fmt(dt) + " s per run");
  });
  c.run("shape_contract", [&] {
    bool ok = true;
    std::string sizes;
    for (const auto& [H, W] : {std::pair<std::size_t, std::size_t>{32, 32}, {64, 96}, {96, 64}}) {
      const PipelineOutput out = run_pipeline(model, scene_pair(opt.config.seed + H + W, H, W));
      ok = ok && out.seg.classes.shape() == Shape{H, W} && out.fused.pixels.shape() == Shape{1, H, W} &&
           unit(out.fused.pixels);
      sizes += std::to_string(H) + "x" + std::to_string(W) + " ";
    }
    c.add("shape_contract", ok, "sizes " + sizes);
  });
}

void data_checks(Checks& c, std::uint64_t seed, Rng& rng) {
  c.run("label_invariance", [&] {
    bool ok = true;
    Rng pick(seed, fnv1a64("label invariance"));
    for (std::size_t k = 0; k < 32; ++k) {
      for (Regime r : {Regime::normal, Regime::foggy, Regime::low_light, Regime::reflection}) {
        SceneSpec spec = random_scene(sample_seed(seed, k), 48, 48, r, pick.uniform());
        spec.thermal_noise = k % 2 == 1;
        const LabeledSample clean = render_clean(spec);
        const LabeledSample dirty = degrade(clean);
        ok = ok && encode_pnm(clean.mask, ImageKind::pgm_mask) == encode_pnm(dirty.mask, ImageKind::pgm_mask) &&
             unit(dirty.pair.visible) && unit(dirty.pair.infrared);
      }
    }
    c.add("label_invariance", ok, "32 scenes x 4 regimes");
  });
  c.run("metric_oracle", [&] {
    bool ok = true;
    const std::size_t K = 5;
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor pred = random_classes(rng, {8, 8}, K), truth = random_classes(rng, {8, 8}, K);
      const EvalResult r = iou_eval(pred, truth, K);
      for (std::size_t cls = 0; cls < K; ++cls) {
        ClassCounts want;
        for (std::size_t k = 0; k < 64; ++k) {
          const bool p = pred[k] == static_cast<double>(cls), t = truth[k] == static_cast<double>(cls);
          want.tp += p && t;
          want.fp += p && !t;
          want.fn += !p && t;
        }
        ok = ok && r.counts[cls] == want;
      }
    }
    c.add("metric_oracle", ok, "20 random 8x8 pairs");
  });
  c.run("io_roundtrip", [&] {
    const Tensor mask = random_classes(rng, {9, 7}, 256);
    const bool mask_ok = decode_pnm(encode_pnm(mask, ImageKind::pgm_mask), ImageKind::pgm_mask) == mask;
    const Tensor img = rng.uniform_tensor({3, 9, 7}, 0.0, 1.0);
    const double err = max_abs_diff(decode_pnm(encode_pnm(img, ImageKind::ppm_rgb), ImageKind::ppm_rgb), img);
    c.add("io_roundtrip", mask_ok && err <= 1.0 / 510.0, "ppm max |d| " + fmt(err));
  });
}

}  // namespace

bool SelftestReport::passed() const {
  if (checks.empty()) return false;
  for (const CheckResult& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string SelftestReport::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed();
  j["check_count"] = checks.size();
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const CheckResult& c : checks) list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = list;
  nlohmann::ordered_json grads = nlohmann::ordered_json::array();
  for (const GradCheckReport& g : gradients) grads.push_back(nlohmann::ordered_json::parse(g.to_json()));
  j["gradient_checks"] = grads;
  return j.dump(2) + "\n";
}

std::vector<GradCheckReport> loss_gradient_checks(std::uint64_t seed, bool corrupt_focal) {
  const std::size_t K = 5;
  Rng rng(seed, fnv1a64("gradient points"));
  GradCheckOptions opt;
  opt.seed = seed;
  std::vector<GradCheckReport> out;

  {
    const Tensor logits = rng.uniform_tensor({K, 8, 8}, -2.0, 2.0);
    const Tensor target = random_classes(rng, {8, 8}, K);
    const auto f = [&](const Tensor& x) { return focal_loss(x, target).value; };
    Tensor grad = focal_loss(logits, target).grad;
    if (corrupt_focal) grad = grad * 1.01;
    out.push_back(gradient_check("focal", f, grad, logits, opt));
  }
  {
    const Tensor probs = softmax(rng.uniform_tensor({K, 8, 8}, -2.0, 2.0), 0);
    const Tensor target = random_classes(rng, {8, 8}, K);
    const auto f = [&](const Tensor& p) { return iou_loss(p, target).value; };
    out.push_back(gradient_check("iou", f, iou_loss(probs, target).grad, probs, opt));
  }
  {
    const std::size_t H = 12, W = 12;
    const ImagePair pair{rng.uniform_tensor({3, H, W}, 0.0, 1.0), rng.uniform_tensor({1, H, W}, 0.0, 1.0),
                         std::nullopt};
    const FusedImage fused{rng.uniform_tensor({1, H, W}, 0.05, 0.95)};
    const auto f = [&](const Tensor& x) { return fusion_loss(FusedImage{x}, pair).value; };
    GradCheckOptions fopt = opt;
    // residuals closer than 10h to zero count as kinks
    fopt.near_kink = [&](std::size_t idx) { return fusion_loss_near_kink(fused, pair, idx, 10.0 * opt.step); };
    out.push_back(gradient_check("fusion", f, fusion_loss(fused, pair).grad, fused.pixels, fopt));
  }
  return out;
}

SelftestReport run_selftest(const SelftestOptions& opt) {
  opt.config.validate();
  Checks c;
  Rng rng(opt.config.seed, fnv1a64("selftest"));
  transform_checks(c, rng);
  attention_checks(c, opt.config.seed);
  loss_checks(c, opt, rng);
  pipeline_checks(c, opt);
  data_checks(c, opt.config.seed, rng);
  return std::move(c.report);
}

}  // namespace mclf
