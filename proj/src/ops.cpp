#include "mclf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mclf {
namespace {

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1, length = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
  s.length = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

// Row-major strides of `shape` right-aligned to `rank`, zero where broadcast.
std::vector<std::size_t> broadcast_strides(const Shape& shape, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t shift = out.size() - shape.size();
  for (std::size_t i = shape.size(); i-- > 0;) {
    strides[i + shift] = shape[i] == 1 ? 0 : stride;
    stride *= shape[i];
  }
  return strides;
}

double apply_binary(BinaryOp op, double x, double y) {
  switch (op) {
    case BinaryOp::add: return x + y;
    case BinaryOp::sub: return x - y;
    case BinaryOp::mul: return x * y;
    case BinaryOp::div:
      if (y == 0.0) throw NonFiniteError("division by exact zero");
      return x / y;
    case BinaryOp::max: return std::max(x, y);
  }
  return 0.0;
}

Tensor conv2d_impl(const Tensor& x, const Tensor& weight, const Eigen::VectorXd& bias, std::size_t stride,
                   std::size_t pad_h, std::size_t pad_w, std::size_t groups) {
  if (x.rank() != 4 || weight.rank() != 4) throw DimensionError("conv2d expects rank-4 input and weight");
  const std::size_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t Cout = weight.dim(0), Cg = weight.dim(1), KH = weight.dim(2), KW = weight.dim(3);
  if (groups == 0 || Cin % groups != 0 || Cout % groups != 0 || Cg != Cin / groups) {
    throw DimensionError("conv2d channel mismatch: input " + shape_string(x.shape()) + ", weight " +
                         shape_string(weight.shape()) + ", groups " + std::to_string(groups));
  }
  if (bias.size() != 0 && static_cast<std::size_t>(bias.size()) != Cout) {
    throw DimensionError("conv2d bias length does not match output channels");
  }
  if (stride == 0) throw DimensionError("conv2d stride must be positive");
  if (H + 2 * pad_h < KH || W + 2 * pad_w < KW) {
    throw DimensionError("conv2d kernel larger than padded input");
  }
  const std::size_t OH = (H + 2 * pad_h - KH) / stride + 1;
  const std::size_t OW = (W + 2 * pad_w - KW) / stride + 1;
  const std::size_t out_per_group = Cout / groups;

  Tensor out(Shape{B, Cout, OH, OW});
  const double* xd = x.data().data();
  const double* wd = weight.data().data();
  double* od = out.data().data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Cout; ++co) {
      const std::size_t g = co / out_per_group;
      const double bv = bias.size() ? bias(static_cast<Eigen::Index>(co)) : 0.0;
      double* orow = od + ((b * Cout + co) * OH) * OW;
      for (std::size_t i = 0; i < OH * OW; ++i) orow[i] = bv;
      for (std::size_t cg = 0; cg < Cg; ++cg) {
        const std::size_t ci = g * Cg + cg;
        const double* xc = xd + ((b * Cin + ci) * H) * W;
        const double* wk = wd + ((co * Cg + cg) * KH) * KW;
        for (std::size_t kh = 0; kh < KH; ++kh) {
          for (std::size_t kw = 0; kw < KW; ++kw) {
            const double wv = wk[kh * KW + kw];
            if (wv == 0.0) continue;
            for (std::size_t oh = 0; oh < OH; ++oh) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride + kh) -
                                        static_cast<std::ptrdiff_t>(pad_h);
              if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
              const double* xr = xc + static_cast<std::size_t>(ih) * W;
              double* orow_h = orow + oh * OW;
              for (std::size_t ow = 0; ow < OW; ++ow) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride + kw) -
                                          static_cast<std::ptrdiff_t>(pad_w);
                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
                orow_h[ow] += wv * xr[iw];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

std::size_t same_padding(std::size_t kernel) {
  if (kernel % 2 == 0) throw DimensionError("same padding requires an odd kernel");
  return (kernel - 1) / 2;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply_binary(op, a[i], b[i]);
    return out;
  }
  const Shape shape = broadcast_shape(a.shape(), b.shape());
  const auto sa = broadcast_strides(a.shape(), shape);
  const auto sb = broadcast_strides(b.shape(), shape);
  Tensor out(shape);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = apply_binary(op, a[oa], b[ob]);
    for (std::size_t d = shape.size(); d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < shape[d]) break;
      oa -= sa[d] * idx[d];
      ob -= sb[d] * idx[d];
      idx[d] = 0;
    }
  }
  return out;
}

Tensor elementwise(BinaryOp op, const Tensor& a, double b) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply_binary(op, a[i], b);
  return out;
}

Tensor elementwise(UnaryOp op, const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = a[i];
    switch (op) {
      case UnaryOp::neg: out[i] = -v; break;
      case UnaryOp::abs: out[i] = std::abs(v); break;
      case UnaryOp::exp: out[i] = std::exp(v); break;
      case UnaryOp::log: out[i] = std::log(v); break;
      case UnaryOp::sigmoid: out[i] = sigmoid(v); break;
      case UnaryOp::relu: out[i] = v > 0.0 ? v : 0.0; break;
    }
  }
  if ((op == UnaryOp::exp || op == UnaryOp::log) && !out.all_finite()) {
    throw NonFiniteError(op == UnaryOp::exp ? "exp overflow" : "log of non-positive value");
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) throw DimensionError("matmul operands need rank >= 2");
  const std::size_t m = a.dim(a.rank() - 2), k = a.dim(a.rank() - 1);
  const std::size_t kb = b.dim(b.rank() - 2), n = b.dim(b.rank() - 1);
  if (k != kb) {
    throw DimensionError("matmul inner dimensions disagree: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
  const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
  const Shape batch = broadcast_shape(batch_a, batch_b);
  const auto sa = broadcast_strides(batch_a, batch);
  const auto sb = broadcast_strides(batch_b, batch);

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out(out_shape);
  const std::size_t count = shape_size(batch);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat, ia = 0, ib = 0;
    for (std::size_t d = batch.size(); d-- > 0;) {
      const std::size_t i = rem % batch[d];
      rem /= batch[d];
      ia += i * sa[d];
      ib += i * sb[d];
    }
    as_matrix(out, flat * m * n, m, n).noalias() = as_matrix(a, ia * m * k, m, k) * as_matrix(b, ib * k * n, k, n);
  }
  return out;
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& order) {
  if (order.size() != a.rank()) throw DimensionError("permute order length must equal rank");
  Shape shape(a.rank());
  std::vector<std::size_t> in_strides(a.rank());
  std::size_t stride = 1;
  for (std::size_t d = a.rank(); d-- > 0;) {
    in_strides[d] = stride;
    stride *= a.dim(d);
  }
  std::vector<std::size_t> strides(a.rank());
  std::vector<bool> seen(a.rank(), false);
  for (std::size_t d = 0; d < order.size(); ++d) {
    if (order[d] >= a.rank() || seen[order[d]]) throw DimensionError("permute order is not a permutation");
    seen[order[d]] = true;
    shape[d] = a.dim(order[d]);
    strides[d] = in_strides[order[d]];
  }
  Tensor out(shape);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = a[off];
    for (std::size_t d = shape.size(); d-- > 0;) {
      ++idx[d];
      off += strides[d];
      if (idx[d] < shape[d]) break;
      off -= strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  return out;
}

Tensor transpose_last(const Tensor& a) {
  if (a.rank() < 2) throw DimensionError("transpose_last needs rank >= 2");
  std::vector<std::size_t> order(a.rank());
  for (std::size_t d = 0; d < a.rank(); ++d) order[d] = d;
  std::swap(order[a.rank() - 1], order[a.rank() - 2]);
  return permute(a, order);
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  const AxisSplit s = split_at(a.shape(), axis);
  Tensor out(a.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < s.length; ++i) peak = std::max(peak, a[base + i * s.inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < s.length; ++i) {
        const double e = std::exp(a[base + i * s.inner] - peak);
        out[base + i * s.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < s.length; ++i) out[base + i * s.inner] /= total;
    }
  }
  return out;
}

Tensor layer_norm(const Tensor& a, std::size_t axis, double eps) {
  const AxisSplit s = split_at(a.shape(), axis);
  Tensor out(a.shape());
  const double n = static_cast<double>(s.length);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      double mu = 0.0;
      for (std::size_t i = 0; i < s.length; ++i) mu += a[base + i * s.inner];
      mu /= n;
      double var = 0.0;
      for (std::size_t i = 0; i < s.length; ++i) {
        const double d = a[base + i * s.inner] - mu;
        var += d * d;
      }
      var /= n;
      const double inv = 1.0 / std::sqrt(var + eps);
      for (std::size_t i = 0; i < s.length; ++i) {
        out[base + i * s.inner] = (a[base + i * s.inner] - mu) * inv;
      }
    }
  }
  return out;
}

Tensor group_norm(const Tensor& a, std::size_t groups, double eps) {
  if (a.rank() < 2) throw DimensionError("group_norm expects B x C x ...");
  const std::size_t B = a.dim(0), C = a.dim(1);
  if (groups == 0 || C % groups != 0) {
    throw ConfigError("group_norm: " + std::to_string(C) + " channels not divisible by " + std::to_string(groups));
  }
  const std::size_t block = (C / groups) * (a.size() / (B * C));
  Tensor out(a.shape());
  for (std::size_t g = 0; g < B * groups; ++g) {
    const std::size_t base = g * block;
    double mu = 0.0;
    for (std::size_t i = 0; i < block; ++i) mu += a[base + i];
    mu /= static_cast<double>(block);
    double var = 0.0;
    for (std::size_t i = 0; i < block; ++i) var += (a[base + i] - mu) * (a[base + i] - mu);
    var /= static_cast<double>(block);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < block; ++i) out[base + i] = (a[base + i] - mu) * inv;
  }
  return out;
}

Tensor apply_affine(const Tensor& a, const Affine& affine) {
  const AxisSplit s = split_at(a.shape(), 1);
  if (static_cast<std::size_t>(affine.scale.size()) != s.length ||
      static_cast<std::size_t>(affine.shift.size()) != s.length) {
    throw DimensionError("affine parameters do not match channel count");
  }
  Tensor out(a.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t c = 0; c < s.length; ++c) {
      const double g = affine.scale(static_cast<Eigen::Index>(c));
      const double b = affine.shift(static_cast<Eigen::Index>(c));
      const std::size_t base = (o * s.length + c) * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) out[base + i] = a[base + i] * g + b;
    }
  }
  return out;
}

Tensor pool(PoolKind kind, const Tensor& a, const std::vector<std::size_t>& axes, bool keepdims) {
  std::vector<bool> reduce(a.rank(), false);
  for (auto ax : axes) {
    if (ax >= a.rank()) throw DimensionError("pool axis out of range for " + shape_string(a.shape()));
    reduce[ax] = true;
  }
  Shape kept(a.rank());
  std::size_t count = 1;
  for (std::size_t d = 0; d < a.rank(); ++d) {
    kept[d] = reduce[d] ? 1 : a.dim(d);
    if (reduce[d]) count *= a.dim(d);
  }
  if (count == 0) throw DimensionError("pool over an empty axis");
  const auto strides = broadcast_strides(kept, a.shape());

  Tensor out(kept, kind == PoolKind::max ? -std::numeric_limits<double>::infinity() : 0.0);
  std::vector<std::size_t> idx(a.rank(), 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < a.size(); ++flat) {
    if (kind == PoolKind::max) {
      out[off] = std::max(out[off], a[flat]);
    } else {
      out[off] += a[flat];
    }
    for (std::size_t d = a.rank(); d-- > 0;) {
      ++idx[d];
      off += strides[d];
      if (idx[d] < a.dim(d)) break;
      off -= strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  if (kind == PoolKind::mean) {
    for (double& v : out.data()) v /= static_cast<double>(count);
  }
  if (keepdims) return out;
  Shape dropped;
  for (std::size_t d = 0; d < a.rank(); ++d) {
    if (!reduce[d]) dropped.push_back(a.dim(d));
  }
  if (dropped.empty()) dropped.push_back(1);
  return out.reshape(dropped);
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Eigen::VectorXd& bias, ConvSpec spec) {
  if (weight.rank() != 4) throw DimensionError("conv2d weight must be rank 4");
  const std::size_t ph = spec.padding ? *spec.padding : same_padding(weight.dim(2));
  const std::size_t pw = spec.padding ? *spec.padding : same_padding(weight.dim(3));
  return conv2d_impl(x, weight, bias, spec.stride, ph, pw, spec.groups);
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Eigen::VectorXd& bias, ConvSpec spec) {
  if (x.rank() != 3 || weight.rank() != 3) throw DimensionError("conv1d expects rank-3 input and weight");
  const std::size_t pad = spec.padding ? *spec.padding : same_padding(weight.dim(2));
  const Tensor out = conv2d_impl(x.reshape({x.dim(0), x.dim(1), 1, x.dim(2)}),
                                 weight.reshape({weight.dim(0), weight.dim(1), 1, weight.dim(2)}), bias,
                                 spec.stride, 0, pad, spec.groups);
  return out.reshape({out.dim(0), out.dim(1), out.dim(3)});
}

Tensor channel_linear(const Tensor& x, const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias) {
  if (x.rank() < 2 || static_cast<std::size_t>(weight.cols()) != x.dim(1)) {
    throw DimensionError("channel_linear: weight " + std::to_string(weight.rows()) + "x" +
                         std::to_string(weight.cols()) + " vs input " + shape_string(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1), rest = x.size() / (x.dim(0) * x.dim(1));
  const std::size_t Cout = static_cast<std::size_t>(weight.rows());
  Shape shape = x.shape();
  shape[1] = Cout;
  Tensor out(shape);
  for (std::size_t b = 0; b < B; ++b) {
    auto dst = as_matrix(out, b * Cout * rest, Cout, rest);
    dst.noalias() = weight * as_matrix(x, b * C * rest, C, rest);
    if (bias.size()) dst.colwise() += bias;
  }
  return out;
}

Tensor linear(const Tensor& x, const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias) {
  const std::size_t C = x.dim(x.rank() - 1);
  if (static_cast<std::size_t>(weight.cols()) != C) {
    throw DimensionError("linear: weight has " + std::to_string(weight.cols()) + " inputs, tensor has " +
                         std::to_string(C));
  }
  const std::size_t rows = x.size() / C;
  const std::size_t Cout = static_cast<std::size_t>(weight.rows());
  Shape shape = x.shape();
  shape.back() = Cout;
  Tensor out(shape);
  auto dst = as_matrix(out, 0, rows, Cout);
  dst.noalias() = as_matrix(x, 0, rows, C) * weight.transpose();
  if (bias.size()) dst.rowwise() += bias.transpose();
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  Shape shape = parts.front().shape();
  if (axis >= shape.size()) throw DimensionError("concat axis out of range");
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != shape.size()) throw DimensionError("concat rank mismatch");
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (d != axis && p.dim(d) != shape[d]) {
        throw DimensionError("concat shape mismatch: " + shape_string(p.shape()) + " vs " + shape_string(shape));
      }
    }
    total += p.dim(axis);
  }
  shape[axis] = total;
  Tensor out(shape);
  const AxisSplit s = split_at(shape, axis);
  std::size_t at = 0;
  for (const auto& p : parts) {
    const std::size_t chunk = p.dim(axis) * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                  out.data().begin() + static_cast<std::ptrdiff_t>(o * total * s.inner + at));
    }
    at += chunk;
  }
  return out;
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisSplit s = split_at(a.shape(), axis);
  if (begin >= end || end > s.length) throw DimensionError("slice range out of bounds");
  Shape shape = a.shape();
  shape[axis] = end - begin;
  Tensor out(shape);
  const std::size_t chunk = (end - begin) * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>((o * s.length + begin) * s.inner), chunk,
                out.data().begin() + static_cast<std::ptrdiff_t>(o * chunk));
  }
  return out;
}

Tensor to_tokens(const Tensor& map) {
  if (map.rank() != 4) throw DimensionError("to_tokens expects B x C x H x W");
  return permute(map, {0, 2, 3, 1}).reshape({map.dim(0), map.dim(2) * map.dim(3), map.dim(1)});
}

Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width) {
  if (tokens.rank() != 3 || tokens.dim(1) != height * width) {
    throw DimensionError("from_tokens: " + shape_string(tokens.shape()) + " is not " + std::to_string(height) +
                         "x" + std::to_string(width) + " tokens");
  }
  return permute(tokens.reshape({tokens.dim(0), height, width, tokens.dim(2)}), {0, 3, 1, 2});
}

Tensor pad_to(const Tensor& map, std::size_t height, std::size_t width) {
  if (map.rank() != 4 || height < map.dim(2) || width < map.dim(3)) throw DimensionError("pad_to: bad target size");
  const std::size_t B = map.dim(0), C = map.dim(1), H = map.dim(2), W = map.dim(3);
  Tensor out(Shape{B, C, height, width});
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) out[(bc * height + y) * width + x] = map[(bc * H + y) * W + x];
  return out;
}

Tensor crop_to(const Tensor& map, std::size_t height, std::size_t width) {
  if (map.rank() != 4 || height > map.dim(2) || width > map.dim(3)) throw DimensionError("crop_to: bad target size");
  const std::size_t B = map.dim(0), C = map.dim(1), H = map.dim(2), W = map.dim(3);
  Tensor out(Shape{B, C, height, width});
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) out[(bc * height + y) * width + x] = map[(bc * H + y) * W + x];
  return out;
}

Tensor upsample_bilinear(const Tensor& map, std::size_t height, std::size_t width) {
  if (map.rank() != 4) throw DimensionError("upsample_bilinear expects B x C x H x W");
  const std::size_t B = map.dim(0), C = map.dim(1), h = map.dim(2), w = map.dim(3);
  // Source coordinate = i * (in - 1) / (out - 1); the integer product keeps corners exact.
  auto source = [](std::size_t i, std::size_t in, std::size_t out) {
    return out > 1 ? static_cast<double>(i * (in - 1)) / static_cast<double>(out - 1) : 0.0;
  };
  Tensor out(Shape{B, C, height, width});
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const double* src = map.data().data() + bc * h * w;
    for (std::size_t y = 0; y < height; ++y) {
      const double sy = source(y, h, height);
      const std::size_t y0 = std::min(static_cast<std::size_t>(sy), h - 1);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t x = 0; x < width; ++x) {
        const double sx = source(x, w, width);
        const std::size_t x0 = std::min(static_cast<std::size_t>(sx), w - 1);
        const std::size_t x1 = std::min(x0 + 1, w - 1);
        const double fx = sx - static_cast<double>(x0);
        const double top = src[y0 * w + x0] + fx * (src[y0 * w + x1] - src[y0 * w + x0]);
        const double bot = src[y1 * w + x0] + fx * (src[y1 * w + x1] - src[y1 * w + x0]);
        out[(bc * height + y) * width + x] = top + fy * (bot - top);
      }
    }
  }
  return out;
}

}  // namespace mclf
