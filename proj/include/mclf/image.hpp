#pragma once

#include <optional>

#include "mclf/tensor.hpp"

namespace mclf {

/// Registered visible/infrared pair with values in [0, 1].
struct ImagePair {
  Tensor visible;              // 3 x H x W
  Tensor infrared;             // 1 x H x W
  std::optional<Tensor> mask;  // H x W class ids

  std::size_t height() const { return visible.dim(1); }
  std::size_t width() const { return visible.dim(2); }
  /// Throws DimensionError unless the modalities (and mask) agree on H x W.
  void validate() const;
};

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// 3 x H x W -> 1 x H x W luma.
Tensor to_gray(const Tensor& rgb);

}  // namespace mclf
