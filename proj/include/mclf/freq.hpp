#pragma once

#include <array>
#include <complex>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mclf/random.hpp"
#include "mclf/tensor.hpp"

namespace mclf {

/// Detail orientation. LH responds to changes down the rows (horizontal
/// edges), HL to changes across columns (vertical edges), HH to diagonals.
enum class Band { LH = 0, HL = 1, HH = 2 };

/// Multi-level orthonormal Haar coefficients of a B x C x H x W map.
struct SubbandSet {
  Tensor approx;                              // LL at the coarsest level
  std::vector<std::array<Tensor, 3>> details;  // details[level - 1][band]

  std::size_t levels() const noexcept { return details.size(); }
  const Tensor& detail(std::size_t level, Band band) const {
    return details.at(level - 1)[static_cast<std::size_t>(band)];
  }
  Tensor& detail(std::size_t level, Band band) { return details.at(level - 1)[static_cast<std::size_t>(band)]; }
};

/// Orthonormal Haar analysis; level j+1 decomposes the level-j LL band.
/// H and W must be divisible by 2^levels.
SubbandSet dwt2(const Tensor& x, std::size_t levels = 2);
Tensor idwt2(const SubbandSet& s);

/// Tiles the sub-bands into one map in the usual wavelet-image layout:
/// coarsest LL top-left; at each level HL to its right, LH below, HH diagonal.
Tensor rearrange_subbands(const SubbandSet& s);
SubbandSet split_subbands(const Tensor& h, std::size_t levels = 2);

std::size_t next_pow2(std::size_t n);

/// In-place radix-2 Cooley-Tukey. Length must be a power of two. The inverse
/// is unnormalised.
void fft_inplace(std::span<std::complex<double>> a, bool inverse);

/// Half-spectrum (width padded_w / 2 + 1) of a real map, in polar form.
struct Spectrum {
  Tensor magnitude;  // B x C x padded_h x (padded_w / 2 + 1)
  Tensor phase;      // radians, same shape
  std::size_t height = 0, width = 0;  // source size before zero-padding
};

/// Real 2-D FFT. Non-power-of-two sizes are zero-padded to the next power of two.
Spectrum rfft2(const Tensor& x);
/// Inverse of rfft2, cropped back to the source size.
Tensor irfft2(const Spectrum& s);

/// conv3x3 -> relu -> conv3x3 over the magnitude stack, then a depthwise
/// 3x3 conv on the reconstructed map.
struct FftRefineParams {
  Tensor denoise1_w;  // C x C x 3 x 3
  Eigen::VectorXd denoise1_b;
  Tensor denoise2_w;  // C x C x 3 x 3
  Eigen::VectorXd denoise2_b;
  Tensor depthwise_w;  // C x 1 x 3 x 3
  Eigen::VectorXd depthwise_b;

  static FftRefineParams identity(std::size_t channels);
  /// Identity plus small uniform perturbations.
  static FftRefineParams random(const ParamSet& ps, std::string_view prefix, std::size_t channels);
};

/// Delta kernel: weight[c][c][centre] = 1 for each channel.
Tensor delta_kernel(std::size_t out_channels, std::size_t in_per_group, std::size_t kernel, bool depthwise);

/// FFT -> denoise magnitude -> recombine with the untouched phase -> IFFT.
Tensor spectral_denoise(const Tensor& x, const FftRefineParams& p);
/// spectral_denoise followed by the depthwise conv. Shape preserving.
Tensor fft_refine(const Tensor& x, const FftRefineParams& p);

}  // namespace mclf
