#include "mclf/image.hpp"

namespace mclf {

void ImagePair::validate() const {
  if (visible.rank() != 3 || visible.dim(0) != 3) {
    throw DimensionError("visible image must be 3 x H x W, got " + shape_string(visible.shape()));
  }
  if (infrared.rank() != 3 || infrared.dim(0) != 1) {
    throw DimensionError("infrared image must be 1 x H x W, got " + shape_string(infrared.shape()));
  }
  if (visible.dim(1) != infrared.dim(1) || visible.dim(2) != infrared.dim(2)) {
    throw DimensionError("modality size mismatch: " + shape_string(visible.shape()) + " vs " +
                         shape_string(infrared.shape()));
  }
  if (mask && mask->shape() != Shape{height(), width()}) {
    throw DimensionError("mask shape " + shape_string(mask->shape()) + " does not match image");
  }
}

Tensor to_gray(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) throw DimensionError("to_gray expects 3 x H x W");
  const std::size_t n = rgb.dim(1) * rgb.dim(2);
  Tensor gray(Shape{1, rgb.dim(1), rgb.dim(2)});
  for (std::size_t i = 0; i < n; ++i) gray[i] = kLumaR * rgb[i] + kLumaG * rgb[n + i] + kLumaB * rgb[2 * n + i];
  return gray;
}

}  // namespace mclf
