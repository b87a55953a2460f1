#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "mclf/tensor.hpp"

namespace testutil {

// Plain std::mt19937_64 draws, kept apart from the library's own Rng.
inline mclf::Tensor uniform(std::mt19937_64& gen, mclf::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  mclf::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = d(gen);
  return t;
}

inline mclf::Tensor labels(std::mt19937_64& gen, mclf::Shape shape, std::size_t classes) {
  std::uniform_int_distribution<std::size_t> d(0, classes - 1);
  mclf::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(d(gen));
  return t;
}

// O(N^4) two-dimensional DFT of a real H x W grid.
inline std::vector<std::complex<double>> naive_dft2(const std::vector<double>& x, std::size_t H, std::size_t W) {
  std::vector<std::complex<double>> out(H * W);
  for (std::size_t u = 0; u < H; ++u)
    for (std::size_t v = 0; v < W; ++v) {
      std::complex<double> acc = 0.0;
      for (std::size_t m = 0; m < H; ++m)
        for (std::size_t n = 0; n < W; ++n) {
          const double ang = -2.0 * std::numbers::pi *
                             (static_cast<double>(u * m) / static_cast<double>(H) +
                              static_cast<double>(v * n) / static_cast<double>(W));
          acc += x[m * W + n] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      out[u * W + v] = acc;
    }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace testutil
