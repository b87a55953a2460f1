#pragma once

#include <filesystem>
#include <string>

#include "mclf/tensor.hpp"

namespace mclf {

/// ppm_rgb: P6 <-> 3 x H x W in [0,1]; pgm_gray: P5 <-> 1 x H x W in [0,1];
/// pgm_mask: P5 <-> H x W integer class ids, stored unscaled.
enum class ImageKind { ppm_rgb, pgm_gray, pgm_mask };

/// Binary PNM with maxval 255. Quantisation rounds half up after clamping to [0,1].
std::string encode_pnm(const Tensor& image, ImageKind kind);
Tensor decode_pnm(const std::string& bytes, ImageKind kind);

void write_image(const std::filesystem::path& path, const Tensor& image, ImageKind kind);
Tensor read_image(const std::filesystem::path& path, ImageKind kind);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace mclf
