#include "mclf/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mclf {

FsecBranchParams FsecBranchParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                                          std::size_t state_dim) {
  const std::string pre(prefix);
  const auto C = static_cast<Eigen::Index>(channels);
  return {Affine::identity(C),
          ScanParams::random(ps, pre + ".local_scan", channels, state_dim),
          Affine::identity(C),
          ScanParams::random(ps, pre + ".global_scan", channels, state_dim),
          ChannelAttnParams::random(ps, pre + ".ca", channels),
          FftRefineParams::random(ps, pre + ".refine", 2 * channels),
          ps.linear(pre + ".proj", C, 2 * C),
          Eigen::VectorXd::Zero(C)};
}

FsecParams FsecParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                              std::size_t state_dim) {
  const std::string pre(prefix);
  return {FsecBranchParams::random(ps, pre + ".visible", channels, state_dim),
          FsecBranchParams::random(ps, pre + ".infrared", channels, state_dim),
          HybridParams::random(ps, pre + ".hybrid", channels)};
}

Tensor frequency_branch(const Tensor& x, const FsecBranchParams& p, Window window) {
  const Tensor tiled = rearrange_subbands(dwt2(x, 2));
  const Tensor normed = apply_affine(layer_norm(tiled, 1), p.freq_norm);
  const Tensor enhanced = tiled + ss2d(normed, p.local_scan, window);
  return idwt2(split_subbands(enhanced, 2));
}

Tensor spatial_branch(const Tensor& x, const FsecBranchParams& p) {
  const Tensor normed = apply_affine(layer_norm(x, 1), p.spatial_norm);
  return x + ss2d(normed, p.global_scan) + channel_attention(normed, p.channel_attn);
}

Tensor enhance_modality(const Tensor& x, const FsecBranchParams& p, Window window) {
  const Tensor joint = concat({spatial_branch(x, p), frequency_branch(x, p, window)}, 1);
  return channel_linear(fft_refine(joint, p.refine), p.proj, p.proj_b);
}

EnhancedPair combine_enhanced(const Tensor& yv, const Tensor& yi, const HybridAttention& h, bool swap_enhance_base) {
  const Tensor keep = -h.gate.values + 1.0;  // 1 - G
  if (swap_enhance_base) {
    return {yv + keep * h.m_i * yi, yi + keep * h.m_v * yv};
  }
  return {yi + keep * h.m_v * yv, yv + keep * h.m_i * yi};
}

FsecTrace fsec_trace(const Tensor& xv, const Tensor& xi, const FsecParams& p, const FsecOptions& opt) {
  if (xv.shape() != xi.shape() || xv.rank() != 4) {
    throw DimensionError("fsec: modality shapes differ: " + shape_string(xv.shape()) + " vs " +
                         shape_string(xi.shape()));
  }
  const std::size_t H = xv.dim(2), W = xv.dim(3);
  if (H % 4 != 0 || W % 4 != 0 || H % opt.window.height != 0 || W % opt.window.width != 0) {
    throw DimensionError("fsec: spatial size " + std::to_string(H) + "x" + std::to_string(W) +
                         " not divisible by 4 and the scan window");
  }
  FsecTrace t;
  t.yv = enhance_modality(xv, p.visible, opt.window);
  t.yi = enhance_modality(xi, p.infrared, opt.window);
  t.hybrid = hybrid_attention(t.yi, t.yv, p.hybrid);
  t.out = combine_enhanced(t.yv, t.yi, t.hybrid, opt.swap_enhance_base);
  return t;
}

EnhancedPair fsec(const Tensor& xv, const Tensor& xi, const FsecParams& p, const FsecOptions& opt) {
  return fsec_trace(xv, xi, p, opt).out;
}

FusedFeature FusedFeature::from_map(const Tensor& map) { return {to_tokens(map), map.dim(2), map.dim(3)}; }

GmiaParams GmiaParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                              std::size_t heads) {
  const std::string pre(prefix);
  const auto C = static_cast<Eigen::Index>(channels);
  return {SelfAttnParams::random(ps, pre + ".self_v", channels, heads),
          SelfAttnParams::random(ps, pre + ".self_i", channels, heads),
          CrossAttnParams::random(ps, pre + ".cross_v", channels, heads),
          CrossAttnParams::random(ps, pre + ".cross_i", channels, heads),
          ps.linear(pre + ".fuse", C, 2 * C),
          Eigen::VectorXd::Zero(C)};
}

GmiaOutput gmia(const Tensor& ev, const Tensor& ei, const GmiaParams& p, AttentionTrace* trace) {
  if (ev.shape() != ei.shape() || ev.rank() != 4) {
    throw DimensionError("gmia: modality shapes differ: " + shape_string(ev.shape()) + " vs " +
                         shape_string(ei.shape()));
  }
  const Tensor tv = to_tokens(ev);
  const Tensor ti = to_tokens(ei);
  const Tensor hv = gated_self_attention(tv, p.self_v, trace);
  const Tensor hi = gated_self_attention(ti, p.self_i, trace);
  GmiaOutput out;
  out.f_v = gated_cross_attention(hv, hi, p.cross_v, trace);
  out.f_i = gated_cross_attention(hi, hv, p.cross_i, trace);
  out.fused = {linear(concat({out.f_i, out.f_v}, 2), p.fuse_w, p.fuse_b), ev.dim(2), ev.dim(3)};
  return out;
}

SvcaParams SvcaParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels) {
  if (channels % 4 != 0) throw ConfigError("svca: channel count must be divisible by 4");
  const std::string pre(prefix);
  const auto C = static_cast<Eigen::Index>(channels);
  SvcaParams p;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t k = kSvcaKernels[i];
    p.axis_w[i] = ps.tensor(pre + ".axis" + std::to_string(i), {channels / 4, 1, k},
                            1.0 / std::sqrt(static_cast<double>(k)));
    p.axis_b[i] = Eigen::VectorXd::Zero(C / 4);
  }
  p.norm = Affine::identity(C);
  p.query = ps.linear(pre + ".query", C, C);
  p.key = ps.linear(pre + ".key", C, C);
  p.gate_w = ps.linear(pre + ".gate", C, C);
  p.gate_b = Eigen::VectorXd::Zero(C);
  return p;
}

namespace {

// edge-replicate along the last axis so constant profiles stay constant
Tensor replicate_pad_last(const Tensor& x, std::size_t pad) {
  const std::size_t L = x.dim(2), rows = x.dim(0) * x.dim(1);
  Tensor out({x.dim(0), x.dim(1), L + 2 * pad});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < L + 2 * pad; ++j) {
      const std::size_t src = j < pad ? 0 : std::min(j - pad, L - 1);
      out[r * (L + 2 * pad) + j] = x[r * L + src];
    }
  return out;
}

}  // namespace

std::pair<Tensor, Tensor> svca_axis_gates(const Tensor& x, const SvcaParams& p) {
  if (x.rank() != 4) throw DimensionError("svca expects B x C x H x W");
  const std::size_t C = x.dim(1);
  if (C % 4 != 0) throw ConfigError("svca: channel count " + std::to_string(C) + " not divisible by 4");
  const std::size_t group = C / 4;
  auto gate = [&](const Tensor& profile) {
    std::vector<Tensor> parts;
    for (std::size_t i = 0; i < 4; ++i) {
      const Tensor part = replicate_pad_last(slice(profile, 1, i * group, (i + 1) * group), kSvcaKernels[i] / 2);
      parts.push_back(
          conv1d(part, p.axis_w[i], p.axis_b[i], ConvSpec{.stride = 1, .padding = std::size_t{0}, .groups = group}));
    }
    return sigmoid(apply_affine(group_norm(concat(parts, 1), p.norm_groups), p.norm));
  };
  return {gate(pool(PoolKind::mean, x, {3})), gate(pool(PoolKind::mean, x, {2}))};
}

Tensor svca_recalibrate(const Tensor& x, const Tensor& m_h, const Tensor& m_w) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (m_h.shape() != Shape{B, C, H} || m_w.shape() != Shape{B, C, W}) {
    throw DimensionError("svca_recalibrate: axis gate shapes do not match " + shape_string(x.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const std::size_t i = (bc * H + h) * W + w;
        out[i] = x[i] * (m_h[bc * H + h] * m_w[bc * W + w]);
      }
  return out;
}

Tensor channel_self_attention(const Tensor& x, const SvcaParams& p, SvcaTrace* trace) {
  const std::size_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  const Tensor desc = pool(PoolKind::mean, x, {2, 3});  // B x C
  Tensor out(x.shape());
  Tensor attn({B, C, C}), gates({B, C});
  for (std::size_t b = 0; b < B; ++b) {
    const Eigen::VectorXd d = as_matrix(desc, b * C, 1, C).transpose();
    const Eigen::VectorXd q = p.query * d;
    const Eigen::VectorXd k = p.key * d;
    const Eigen::MatrixXd a = softmax_rows(q * k.transpose());
    const Eigen::VectorXd g = (p.gate_w * d + p.gate_b).unaryExpr([](double z) { return sigmoid(z); });
    const auto xb = as_matrix(x, b * C * HW, C, HW);
    as_matrix(out, b * C * HW, C, HW) = xb + g.asDiagonal() * (a * xb);
    as_matrix(attn, b * C * C, C, C) = a;
    as_matrix(gates, b * C, 1, C) = g.transpose();
  }
  if (trace) {
    trace->attention = std::move(attn);
    trace->gate.values = std::move(gates);
  }
  return out;
}

Tensor svca(const FusedFeature& f, const SvcaParams& p, SvcaTrace* trace) {
  const Tensor x = f.map();
  auto [m_h, m_w] = svca_axis_gates(x, p);
  Tensor recalibrated = svca_recalibrate(x, m_h, m_w);
  Tensor out = channel_self_attention(recalibrated, p, trace);
  if (trace) {
    trace->m_h = std::move(m_h);
    trace->m_w = std::move(m_w);
    trace->recalibrated = std::move(recalibrated);
  }
  return out;
}

}  // namespace mclf
