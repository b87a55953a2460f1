#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mclf/random.hpp"
#include "mclf/tensor.hpp"

namespace mclf {

// ---------------------------------------------------------------------------
// Selective scan
// ---------------------------------------------------------------------------

/// Input-dependent gated linear recurrence, per pixel x_t in R^C:
///   a_t = sigmoid(decay * x_t + decay_bias),  b_t = input * x_t,  c_t = output * x_t
///   h_t[:, d] = a_t .* h_{t-1}[:, d] + b_t * x_t[d],   y_t[d] = <c_t, h_t[:, d]>
/// with a state of `state_dim` entries per channel.
struct ScanParams {
  Eigen::MatrixXd decay;   // S x C
  Eigen::VectorXd decay_bias;
  Eigen::MatrixXd input;   // S x C
  Eigen::MatrixXd output;  // S x C

  std::size_t state_dim() const { return static_cast<std::size_t>(decay.rows()); }
  std::size_t channels() const { return static_cast<std::size_t>(decay.cols()); }

  static ScanParams zero(std::size_t channels, std::size_t state_dim = 4);
  static ScanParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                           std::size_t state_dim = 4);
};

enum class ScanOrder { row_major, column_major, row_major_reversed, column_major_reversed };

struct Window {
  std::size_t height = 4;
  std::size_t width = 4;
};

/// One directional pass. With a window, each non-overlapping tile is scanned
/// independently and the state resets between tiles.
Tensor selective_scan(const Tensor& x, const ScanParams& p, ScanOrder order,
                      std::optional<Window> window = std::nullopt);

/// Mean of the four directional passes. Shape preserving.
Tensor ss2d(const Tensor& x, const ScanParams& p, std::optional<Window> window = std::nullopt);

// ---------------------------------------------------------------------------
// Channel and hybrid attention
// ---------------------------------------------------------------------------

struct ChannelAttnParams {
  Eigen::MatrixXd w1;  // hidden x C
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // C x hidden
  Eigen::VectorXd b2;

  static ChannelAttnParams zero(std::size_t channels);
  static ChannelAttnParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels);
};

/// Squeeze (spatial mean) -> C/4 bottleneck with relu -> sigmoid gate, B x C x 1 x 1.
Tensor channel_attention_gate(const Tensor& x, const ChannelAttnParams& p);
Tensor channel_attention(const Tensor& x, const ChannelAttnParams& p);

/// Tensor whose entries are sigmoid outputs.
struct GateMap {
  Tensor values;

  bool in_unit_interval() const;
};

struct HybridParams {
  Eigen::MatrixXd mlp_w1;  // hidden x 2C, shared by the mean and max branches
  Eigen::VectorXd mlp_b1;
  Eigen::MatrixXd mlp_w2;  // 2C x hidden
  Eigen::VectorXd mlp_b2;
  Tensor spatial_w;        // 1 x 2 x 7 x 7 over [channel mean, channel max]
  Eigen::VectorXd spatial_b;
  Eigen::MatrixXd gate_w;  // C x 2C
  Eigen::VectorXd gate_b;

  static HybridParams zero(std::size_t channels);
  static HybridParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels);
};

struct HybridAttention {
  Tensor channel_weights;  // B x 2C x 1 x 1
  Tensor spatial_weights;  // B x 1 x H x W
  Tensor m_i;              // slice of W_c * W_s over the infrared channels, B x C x H x W
  Tensor m_v;              // slice over the visible channels
  GateMap gate;            // B x C x 1 x 1
};

/// Channel and spatial attention over the concatenation [yi, yv].
HybridAttention hybrid_attention(const Tensor& yi, const Tensor& yv, const HybridParams& p);

// ---------------------------------------------------------------------------
// Gated scaled-dot attention over token sequences (B x N x C)
// ---------------------------------------------------------------------------

struct SelfAttnParams {
  std::size_t heads = 4;
  Eigen::MatrixXd wq, wk, wv, wo;  // C x C
  Eigen::MatrixXd gate_w;          // heads x C, applied to the mean token
  Eigen::VectorXd gate_b;

  static SelfAttnParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                               std::size_t heads);
};

struct CrossAttnParams {
  std::size_t heads = 4;
  Eigen::MatrixXd wq, wk, wv;  // C x C
  Eigen::MatrixXd gate_w;      // C x C, applied per query token
  Eigen::VectorXd gate_b;

  static CrossAttnParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                                std::size_t heads);
};

/// Optional sink for intermediate attention maps and gates.
struct AttentionTrace {
  std::vector<Tensor> attention;  // each B x heads x N x M
  std::vector<Tensor> gates;
};

/// Per head softmax(QK^T / sqrt(d)) V scaled by sigmoid(gate_w[h] . mean_token + gate_b[h]);
/// heads concatenated then projected by wo.
Tensor gated_self_attention(const Tensor& f, const SelfAttnParams& p, AttentionTrace* trace = nullptr);

/// (softmax(Q K^T / sqrt(d)) V) * sigmoid(fq gate_w^T + gate_b), Q from fq, K and V from fkv.
Tensor gated_cross_attention(const Tensor& fq, const Tensor& fkv, const CrossAttnParams& p,
                             AttentionTrace* trace = nullptr);

/// Row-wise stable softmax of an Eigen matrix.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

}  // namespace mclf
