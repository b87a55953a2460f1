#include "mclf/attention.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "mclf/ops.hpp"

namespace mclf {
namespace {

std::vector<std::size_t> scan_sequence(std::size_t h0, std::size_t w0, std::size_t h, std::size_t w,
                                       std::size_t W, ScanOrder order) {
  std::vector<std::size_t> seq;
  seq.reserve(h * w);
  const bool by_column = order == ScanOrder::column_major || order == ScanOrder::column_major_reversed;
  if (by_column) {
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t i = 0; i < h; ++i) seq.push_back((h0 + i) * W + w0 + j);
  } else {
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) seq.push_back((h0 + i) * W + w0 + j);
  }
  if (order == ScanOrder::row_major_reversed || order == ScanOrder::column_major_reversed) {
    std::reverse(seq.begin(), seq.end());
  }
  return seq;
}

// Per-pixel recurrence coefficients for one batch item, each S x (H*W).
struct ScanCoefficients {
  Eigen::MatrixXd a, b, c;
};

ScanCoefficients coefficients(const Eigen::Map<const RowMatrix>& x, const ScanParams& p) {
  ScanCoefficients k;
  k.a = p.decay * x;
  if (p.decay_bias.size()) k.a.colwise() += p.decay_bias;
  k.a = k.a.unaryExpr([](double v) { return sigmoid(v); });
  k.b = p.input * x;
  k.c = p.output * x;
  return k;
}

// Accumulates weight * scan output for one order into `out` (C x H*W).
void run_scan(const Eigen::Map<const RowMatrix>& x, const ScanCoefficients& k, std::size_t H, std::size_t W,
              std::optional<Window> window, ScanOrder order, double weight, Eigen::Map<RowMatrix>& out) {
  const Eigen::Index C = x.rows();
  const Eigen::Index S = k.a.rows();
  const std::size_t wh = window ? window->height : H;
  const std::size_t ww = window ? window->width : W;
  Eigen::MatrixXd state(S, C);
  for (std::size_t h0 = 0; h0 < H; h0 += wh) {
    for (std::size_t w0 = 0; w0 < W; w0 += ww) {
      state.setZero();
      for (std::size_t t : scan_sequence(h0, w0, wh, ww, W, order)) {
        const auto ti = static_cast<Eigen::Index>(t);
        // h = a .* h + b x^T
        state = k.a.col(ti).asDiagonal() * state;
        state.noalias() += k.b.col(ti) * x.col(ti).transpose();
        out.col(ti).noalias() += weight * (state.transpose() * k.c.col(ti));
      }
    }
  }
}

void check_scan_input(const Tensor& x, const ScanParams& p, std::optional<Window> window) {
  if (x.rank() != 4) throw DimensionError("ss2d expects B x C x H x W");
  if (x.dim(1) != p.channels()) throw DimensionError("ss2d: parameter channel count mismatch");
  if (window) {
    if (window->height == 0 || window->width == 0 || x.dim(2) % window->height != 0 ||
        x.dim(3) % window->width != 0) {
      throw DimensionError("ss2d: window " + std::to_string(window->height) + "x" + std::to_string(window->width) +
                           " does not tile " + shape_string(x.shape()));
    }
  }
}

Tensor scan_orders(const Tensor& x, const ScanParams& p, std::span<const ScanOrder> orders,
                   std::optional<Window> window) {
  check_scan_input(x, p, window);
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor out(x.shape());
  const double weight = 1.0 / static_cast<double>(orders.size());
  for (std::size_t b = 0; b < B; ++b) {
    const auto xb = as_matrix(x, b * C * H * W, C, H * W);
    auto ob = as_matrix(out, b * C * H * W, C, H * W);
    const ScanCoefficients k = coefficients(xb, p);
    for (ScanOrder order : orders) run_scan(xb, k, H, W, window, order, weight, ob);
  }
  return out;
}

Eigen::VectorXd mean_row(const Eigen::Map<const RowMatrix>& m) { return m.colwise().mean().transpose(); }

}  // namespace

ScanParams ScanParams::zero(std::size_t channels, std::size_t state_dim) {
  const auto S = static_cast<Eigen::Index>(state_dim), C = static_cast<Eigen::Index>(channels);
  return {Eigen::MatrixXd::Zero(S, C), Eigen::VectorXd::Zero(S), Eigen::MatrixXd::Zero(S, C),
          Eigen::MatrixXd::Zero(S, C)};
}

ScanParams ScanParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                              std::size_t state_dim) {
  const std::string pre(prefix);
  const auto S = static_cast<Eigen::Index>(state_dim), C = static_cast<Eigen::Index>(channels);
  return {ps.linear(pre + ".decay", S, C), Eigen::VectorXd::Zero(S), ps.linear(pre + ".input", S, C),
          ps.linear(pre + ".output", S, C)};
}

Tensor selective_scan(const Tensor& x, const ScanParams& p, ScanOrder order, std::optional<Window> window) {
  const ScanOrder orders[] = {order};
  return scan_orders(x, p, orders, window);
}

Tensor ss2d(const Tensor& x, const ScanParams& p, std::optional<Window> window) {
  constexpr ScanOrder orders[] = {ScanOrder::row_major, ScanOrder::column_major, ScanOrder::row_major_reversed,
                                  ScanOrder::column_major_reversed};
  return scan_orders(x, p, orders, window);
}

ChannelAttnParams ChannelAttnParams::zero(std::size_t channels) {
  const auto C = static_cast<Eigen::Index>(channels);
  const Eigen::Index hidden = std::max<Eigen::Index>(1, C / 4);
  return {Eigen::MatrixXd::Zero(hidden, C), Eigen::VectorXd::Zero(hidden), Eigen::MatrixXd::Zero(C, hidden),
          Eigen::VectorXd::Zero(C)};
}

ChannelAttnParams ChannelAttnParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels) {
  const std::string pre(prefix);
  const auto C = static_cast<Eigen::Index>(channels);
  const Eigen::Index hidden = std::max<Eigen::Index>(1, C / 4);
  return {ps.linear(pre + ".w1", hidden, C), Eigen::VectorXd::Zero(hidden), ps.linear(pre + ".w2", C, hidden),
          Eigen::VectorXd::Zero(C)};
}

Tensor channel_attention_gate(const Tensor& x, const ChannelAttnParams& p) {
  if (x.rank() != 4) throw DimensionError("channel_attention expects B x C x H x W");
  const Tensor squeezed = pool(PoolKind::mean, x, {2, 3});  // B x C
  const Tensor gate = sigmoid(linear(relu(linear(squeezed, p.w1, p.b1)), p.w2, p.b2));
  return gate.reshape({x.dim(0), x.dim(1), 1, 1});
}

Tensor channel_attention(const Tensor& x, const ChannelAttnParams& p) { return x * channel_attention_gate(x, p); }

bool GateMap::in_unit_interval() const {
  for (double v : values.data()) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

HybridParams HybridParams::zero(std::size_t channels) {
  const auto C2 = static_cast<Eigen::Index>(2 * channels);
  const Eigen::Index hidden = std::max<Eigen::Index>(1, C2 / 4);
  return {Eigen::MatrixXd::Zero(hidden, C2),
          Eigen::VectorXd::Zero(hidden),
          Eigen::MatrixXd::Zero(C2, hidden),
          Eigen::VectorXd::Zero(C2),
          Tensor({1, 2, 7, 7}),
          Eigen::VectorXd::Zero(1),
          Eigen::MatrixXd::Zero(C2 / 2, C2),
          Eigen::VectorXd::Zero(C2 / 2)};
}

HybridParams HybridParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels) {
  const std::string pre(prefix);
  HybridParams p = zero(channels);
  p.mlp_w1 = ps.linear(pre + ".mlp1", p.mlp_w1.rows(), p.mlp_w1.cols());
  p.mlp_w2 = ps.linear(pre + ".mlp2", p.mlp_w2.rows(), p.mlp_w2.cols());
  p.spatial_w = ps.tensor(pre + ".spatial", {1, 2, 7, 7}, 1.0 / std::sqrt(98.0));
  p.gate_w = ps.linear(pre + ".gate", p.gate_w.rows(), p.gate_w.cols());
  return p;
}

HybridAttention hybrid_attention(const Tensor& yi, const Tensor& yv, const HybridParams& p) {
  if (yi.shape() != yv.shape() || yi.rank() != 4) {
    throw DimensionError("hybrid_attention: modality shapes differ: " + shape_string(yi.shape()) + " vs " +
                         shape_string(yv.shape()));
  }
  const std::size_t B = yi.dim(0), C = yi.dim(1);
  const Tensor cat = concat({yi, yv}, 1);

  const Tensor avg = pool(PoolKind::mean, cat, {2, 3});
  const Tensor mx = pool(PoolKind::max, cat, {2, 3});
  auto mlp = [&](const Tensor& v) { return linear(relu(linear(v, p.mlp_w1, p.mlp_b1)), p.mlp_w2, p.mlp_b2); };
  HybridAttention out;
  out.channel_weights = sigmoid(mlp(avg) + mlp(mx)).reshape({B, 2 * C, 1, 1});

  const Tensor stats = concat({pool(PoolKind::mean, cat, {1}, true), pool(PoolKind::max, cat, {1}, true)}, 1);
  out.spatial_weights = sigmoid(conv2d(stats, p.spatial_w, p.spatial_b));

  const Tensor m = out.channel_weights * out.spatial_weights;  // B x 2C x H x W
  out.m_i = slice(m, 1, 0, C);
  out.m_v = slice(m, 1, C, 2 * C);
  out.gate.values = sigmoid(linear(avg, p.gate_w, p.gate_b)).reshape({B, C, 1, 1});
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out = scores.colwise() - scores.rowwise().maxCoeff();
  out = out.array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

SelfAttnParams SelfAttnParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                                      std::size_t heads) {
  const std::string pre(prefix);
  const auto C = static_cast<Eigen::Index>(channels);
  return {heads,
          ps.linear(pre + ".wq", C, C),
          ps.linear(pre + ".wk", C, C),
          ps.linear(pre + ".wv", C, C),
          ps.linear(pre + ".wo", C, C),
          ps.linear(pre + ".gate", static_cast<Eigen::Index>(heads), C),
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(heads))};
}

CrossAttnParams CrossAttnParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels,
                                        std::size_t heads) {
  const std::string pre(prefix);
  const auto C = static_cast<Eigen::Index>(channels);
  return {heads,
          ps.linear(pre + ".wq", C, C),
          ps.linear(pre + ".wk", C, C),
          ps.linear(pre + ".wv", C, C),
          ps.linear(pre + ".gate", C, C),
          Eigen::VectorXd::Zero(C)};
}

namespace {

std::size_t head_dim(std::size_t channels, std::size_t heads) {
  if (heads == 0 || channels % heads != 0) {
    throw ConfigError("head count " + std::to_string(heads) + " does not divide " + std::to_string(channels) +
                      " channels");
  }
  return channels / heads;
}

}  // namespace

Tensor gated_self_attention(const Tensor& f, const SelfAttnParams& p, AttentionTrace* trace) {
  if (f.rank() != 3) throw DimensionError("gated_self_attention expects B x N x C");
  const std::size_t B = f.dim(0), N = f.dim(1), C = f.dim(2);
  if (static_cast<std::size_t>(p.wq.cols()) != C) throw DimensionError("gated_self_attention: channel mismatch");
  const std::size_t d = head_dim(C, p.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Tensor out(f.shape());
  Tensor attn_trace, gate_trace;
  if (trace) {
    attn_trace = Tensor({B, p.heads, N, N});
    gate_trace = Tensor({B, p.heads});
  }
  for (std::size_t b = 0; b < B; ++b) {
    const auto x = as_matrix(f, b * N * C, N, C);
    const Eigen::MatrixXd q = x * p.wq.transpose();
    const Eigen::MatrixXd k = x * p.wk.transpose();
    const Eigen::MatrixXd v = x * p.wv.transpose();
    const Eigen::VectorXd gate_logits = p.gate_w * mean_row(x) + p.gate_b;
    Eigen::MatrixXd heads_out(N, C);
    for (std::size_t h = 0; h < p.heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h * d), dd = static_cast<Eigen::Index>(d);
      const Eigen::MatrixXd a = softmax_rows(scale * q.middleCols(c0, dd) * k.middleCols(c0, dd).transpose());
      const double g = sigmoid(gate_logits(static_cast<Eigen::Index>(h)));
      heads_out.middleCols(c0, dd).noalias() = g * (a * v.middleCols(c0, dd));
      if (trace) {
        as_matrix(attn_trace, (b * p.heads + h) * N * N, N, N) = a;
        gate_trace(b, h) = g;
      }
    }
    as_matrix(out, b * N * C, N, C).noalias() = heads_out * p.wo.transpose();
  }
  if (trace) {
    trace->attention.push_back(std::move(attn_trace));
    trace->gates.push_back(std::move(gate_trace));
  }
  return out;
}

Tensor gated_cross_attention(const Tensor& fq, const Tensor& fkv, const CrossAttnParams& p, AttentionTrace* trace) {
  if (fq.rank() != 3 || fkv.rank() != 3) throw DimensionError("gated_cross_attention expects B x N x C inputs");
  if (fq.dim(0) != fkv.dim(0) || fq.dim(2) != fkv.dim(2)) {
    throw DimensionError("gated_cross_attention: " + shape_string(fq.shape()) + " vs " + shape_string(fkv.shape()));
  }
  const std::size_t B = fq.dim(0), N = fq.dim(1), M = fkv.dim(1), C = fq.dim(2);
  if (static_cast<std::size_t>(p.wq.cols()) != C) throw DimensionError("gated_cross_attention: channel mismatch");
  const std::size_t d = head_dim(C, p.heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Tensor out(fq.shape());
  Tensor attn_trace, gate_trace;
  if (trace) {
    attn_trace = Tensor({B, p.heads, N, M});
    gate_trace = Tensor({B, N, C});
  }
  for (std::size_t b = 0; b < B; ++b) {
    const auto xq = as_matrix(fq, b * N * C, N, C);
    const auto xkv = as_matrix(fkv, b * M * C, M, C);
    const Eigen::MatrixXd q = xq * p.wq.transpose();
    const Eigen::MatrixXd k = xkv * p.wk.transpose();
    const Eigen::MatrixXd v = xkv * p.wv.transpose();
    Eigen::MatrixXd gate = xq * p.gate_w.transpose();
    gate.rowwise() += p.gate_b.transpose();
    gate = gate.unaryExpr([](double z) { return sigmoid(z); });
    Eigen::MatrixXd attended(N, C);
    for (std::size_t h = 0; h < p.heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h * d), dd = static_cast<Eigen::Index>(d);
      const Eigen::MatrixXd a = softmax_rows(scale * q.middleCols(c0, dd) * k.middleCols(c0, dd).transpose());
      attended.middleCols(c0, dd).noalias() = a * v.middleCols(c0, dd);
      if (trace) as_matrix(attn_trace, (b * p.heads + h) * N * M, N, M) = a;
    }
    as_matrix(out, b * N * C, N, C) = attended.cwiseProduct(gate);
    if (trace) as_matrix(gate_trace, b * N * C, N, C) = gate;
  }
  if (trace) {
    trace->attention.push_back(std::move(attn_trace));
    trace->gates.push_back(std::move(gate_trace));
  }
  return out;
}

}  // namespace mclf
