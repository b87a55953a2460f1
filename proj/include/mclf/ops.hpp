#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mclf/tensor.hpp"

namespace mclf {

enum class BinaryOp { add, sub, mul, div, max };
enum class UnaryOp { neg, abs, exp, log, sigmoid, relu };

/// Numpy-style broadcasting: shapes are right-aligned, each dimension pair
/// must be equal or contain a 1. Throws NonFiniteError on division by an
/// exact zero.
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);
Tensor elementwise(BinaryOp op, const Tensor& a, double b);
Tensor elementwise(UnaryOp op, const Tensor& a);

Shape broadcast_shape(const Shape& a, const Shape& b);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::div, a, b); }
inline Tensor operator+(const Tensor& a, double b) { return elementwise(BinaryOp::add, a, b); }
inline Tensor operator-(const Tensor& a, double b) { return elementwise(BinaryOp::sub, a, b); }
inline Tensor operator*(const Tensor& a, double b) { return elementwise(BinaryOp::mul, a, b); }
inline Tensor operator*(double a, const Tensor& b) { return elementwise(BinaryOp::mul, b, a); }
inline Tensor operator-(const Tensor& a) { return elementwise(UnaryOp::neg, a); }

inline Tensor sigmoid(const Tensor& a) { return elementwise(UnaryOp::sigmoid, a); }
inline Tensor relu(const Tensor& a) { return elementwise(UnaryOp::relu, a); }
inline Tensor abs(const Tensor& a) { return elementwise(UnaryOp::abs, a); }
inline Tensor exp(const Tensor& a) { return elementwise(UnaryOp::exp, a); }
inline Tensor log(const Tensor& a) { return elementwise(UnaryOp::log, a); }
inline Tensor maximum(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::max, a, b); }

double sigmoid(double x);

/// Batched matrix product over the last two axes; leading axes broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Swaps the last two axes.
Tensor transpose_last(const Tensor& a);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& order);

/// Numerically stable softmax along one axis.
Tensor softmax(const Tensor& a, std::size_t axis);

/// Normalises each 1-D slice along `axis` to zero mean and unit variance.
Tensor layer_norm(const Tensor& a, std::size_t axis, double eps = 1e-5);
/// Normalises each (batch, channel group) over its channels and all trailing
/// axes. Input is B x C x ...; C must be divisible by `groups`.
Tensor group_norm(const Tensor& a, std::size_t groups, double eps = 1e-5);

/// Per-channel scale and shift on axis 1.
struct Affine {
  Eigen::VectorXd scale;
  Eigen::VectorXd shift;

  static Affine identity(Eigen::Index channels) {
    return {Eigen::VectorXd::Ones(channels), Eigen::VectorXd::Zero(channels)};
  }
};
Tensor apply_affine(const Tensor& a, const Affine& affine);

enum class PoolKind { mean, max };

/// Reduces over `axes`. Reduced axes are dropped unless `keepdims`.
Tensor pool(PoolKind kind, const Tensor& a, const std::vector<std::size_t>& axes, bool keepdims = false);

struct ConvSpec {
  std::size_t stride = 1;
  /// nullopt selects "same" padding, which requires an odd kernel.
  std::optional<std::size_t> padding;
  /// Depthwise when equal to the channel count.
  std::size_t groups = 1;
};

/// Cross-correlation with zero padding.
/// x: B x Cin x H x W, weight: Cout x Cin/groups x KH x KW, bias: Cout or empty.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Eigen::VectorXd& bias = {}, ConvSpec spec = {});
/// x: B x Cin x L, weight: Cout x Cin/groups x K.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Eigen::VectorXd& bias = {}, ConvSpec spec = {});

/// Applies W (Cout x Cin) plus bias over axis 1 of a B x C x ... tensor.
Tensor channel_linear(const Tensor& x, const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias = {});
/// Applies W (Cout x Cin) plus bias over the last axis.
Tensor linear(const Tensor& x, const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias = {});

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);

/// B x C x H x W  <->  B x (H*W) x C, tokens in row-major pixel order.
Tensor to_tokens(const Tensor& map);
Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width);

/// Zero padding on the bottom and right of a B x C x H x W map.
Tensor pad_to(const Tensor& map, std::size_t height, std::size_t width);
/// Top-left crop of a B x C x H x W map.
Tensor crop_to(const Tensor& map, std::size_t height, std::size_t width);

/// Bilinear resize of B x C x h x w to B x C x H x W with align-corners.
Tensor upsample_bilinear(const Tensor& map, std::size_t height, std::size_t width);

/// Eigen view of a rank-2 tensor.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
inline Eigen::Map<const RowMatrix> as_matrix(const Tensor& t, std::size_t offset, std::size_t rows,
                                             std::size_t cols) {
  return {t.data().data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline Eigen::Map<RowMatrix> as_matrix(Tensor& t, std::size_t offset, std::size_t rows, std::size_t cols) {
  return {t.data().data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

}  // namespace mclf
