#pragma once

#include <array>
#include <string_view>

#include <Eigen/Dense>

#include "mclf/attention.hpp"
#include "mclf/freq.hpp"
#include "mclf/ops.hpp"
#include "mclf/tensor.hpp"

namespace mclf {

// ---------------------------------------------------------------------------
// Frequency-spatial enhancement
// ---------------------------------------------------------------------------

/// Weights of one modality's enhancement path.
struct FsecBranchParams {
  Affine freq_norm;
  ScanParams local_scan;
  Affine spatial_norm;
  ScanParams global_scan;
  ChannelAttnParams channel_attn;
  FftRefineParams refine;  // over the 2C concatenation
  Eigen::MatrixXd proj;    // C x 2C
  Eigen::VectorXd proj_b;

  static FsecBranchParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                                 std::size_t state_dim);
};

struct FsecParams {
  FsecBranchParams visible;
  FsecBranchParams infrared;
  HybridParams hybrid;

  static FsecParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                           std::size_t state_dim);
};

struct FsecOptions {
  Window window{4, 4};
  /// false: E^V = Y^I + (1 - G) M_V Y^V (formula as printed).
  /// true:  E^V = Y^V + (1 - G) M_I Y^I, and symmetrically for E^I.
  bool swap_enhance_base = false;
};

struct EnhancedPair {
  Tensor ev;
  Tensor ei;
};

/// Two-level DWT, windowed scan with residual over the tiled sub-bands, inverse DWT.
Tensor frequency_branch(const Tensor& x, const FsecBranchParams& p, Window window);
/// X + ss2d(LN(X)) + CA(LN(X)).
Tensor spatial_branch(const Tensor& x, const FsecBranchParams& p);
/// proj(fft_refine([spatial, frequency])): the per-modality feature Y.
Tensor enhance_modality(const Tensor& x, const FsecBranchParams& p, Window window);

EnhancedPair combine_enhanced(const Tensor& yv, const Tensor& yi, const HybridAttention& h, bool swap_enhance_base);

struct FsecTrace {
  Tensor yv, yi;
  HybridAttention hybrid;
  EnhancedPair out;
};

/// Spatial dims must be divisible by 4 and by the window.
FsecTrace fsec_trace(const Tensor& xv, const Tensor& xi, const FsecParams& p, const FsecOptions& opt = {});
EnhancedPair fsec(const Tensor& xv, const Tensor& xi, const FsecParams& p, const FsecOptions& opt = {});

// ---------------------------------------------------------------------------
// Gated modality-interactive attention
// ---------------------------------------------------------------------------

/// Token-form feature plus the map geometry it came from.
struct FusedFeature {
  Tensor tokens;  // B x N x C, N = height * width
  std::size_t height = 0, width = 0;

  static FusedFeature from_map(const Tensor& map);
  Tensor map() const { return from_tokens(tokens, height, width); }
};

struct GmiaParams {
  SelfAttnParams self_v, self_i;
  CrossAttnParams cross_v;  // visible queries, infrared keys/values
  CrossAttnParams cross_i;  // infrared queries, visible keys/values
  Eigen::MatrixXd fuse_w;   // C x 2C over [F^I, F^V]
  Eigen::VectorXd fuse_b;

  static GmiaParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels, std::size_t heads);
};

struct GmiaOutput {
  FusedFeature fused;
  Tensor f_v;  // gated cross-attended visible tokens
  Tensor f_i;
};

GmiaOutput gmia(const Tensor& ev, const Tensor& ei, const GmiaParams& p, AttentionTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Semantic-visual consistency attention
// ---------------------------------------------------------------------------

inline constexpr std::array<std::size_t, 4> kSvcaKernels{3, 5, 7, 9};

struct SvcaParams {
  std::array<Tensor, 4> axis_w;  // group i: C/4 x 1 x k_i, shared by the height and width branches
  std::array<Eigen::VectorXd, 4> axis_b;
  std::size_t norm_groups = 4;
  Affine norm;
  Eigen::MatrixXd query, key;  // C x C over the pooled channel descriptor
  Eigen::MatrixXd gate_w;      // C x C
  Eigen::VectorXd gate_b;

  static SvcaParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels);
};

struct SvcaTrace {
  Tensor m_h;           // B x C x H
  Tensor m_w;           // B x C x W
  Tensor recalibrated;  // X' = X * (M^h outer M^w)
  Tensor attention;     // B x C x C
  GateMap gate;         // B x C
};

/// Axis gates M^h, M^w in [0,1] from the pooled height/width profiles.
std::pair<Tensor, Tensor> svca_axis_gates(const Tensor& x, const SvcaParams& p);
/// X * (M^h outer M^w).
Tensor svca_recalibrate(const Tensor& x, const Tensor& m_h, const Tensor& m_w);
/// Single-head attention across channels plus sigmoid gate, residual on X'.
Tensor channel_self_attention(const Tensor& x, const SvcaParams& p, SvcaTrace* trace = nullptr);

/// Output has the map shape of `f`. Channel count must be divisible by 4.
Tensor svca(const FusedFeature& f, const SvcaParams& p, SvcaTrace* trace = nullptr);

}  // namespace mclf
