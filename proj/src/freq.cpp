#include "mclf/freq.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mclf/ops.hpp"

namespace mclf {
namespace {

constexpr double kHalf = 0.5;

struct HaarLevel {
  Tensor ll, lh, hl, hh;
};

// a b
// c d   ->  LL = (a+b+c+d)/2, LH = (a+b-c-d)/2, HL = (a-b+c-d)/2, HH = (a-b-c+d)/2
HaarLevel haar_analysis(const Tensor& x) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t h = H / 2, w = W / 2;
  HaarLevel out{Tensor({B, C, h, w}), Tensor({B, C, h, w}), Tensor({B, C, h, w}), Tensor({B, C, h, w})};
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t src = (bc * H + 2 * i) * W + 2 * j;
        const double a = x[src], b = x[src + 1], c = x[src + W], d = x[src + W + 1];
        const std::size_t dst = (bc * h + i) * w + j;
        out.ll[dst] = kHalf * (a + b + c + d);
        out.lh[dst] = kHalf * (a + b - c - d);
        out.hl[dst] = kHalf * (a - b + c - d);
        out.hh[dst] = kHalf * (a - b - c + d);
      }
    }
  }
  return out;
}

Tensor haar_synthesis(const Tensor& ll, const Tensor& lh, const Tensor& hl, const Tensor& hh) {
  if (ll.shape() != lh.shape() || ll.shape() != hl.shape() || ll.shape() != hh.shape()) {
    throw DimensionError("idwt2: inconsistent sub-band shapes " + shape_string(ll.shape()));
  }
  const std::size_t B = ll.dim(0), C = ll.dim(1), h = ll.dim(2), w = ll.dim(3);
  const std::size_t H = 2 * h, W = 2 * w;
  Tensor x(Shape{B, C, H, W});
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t s = (bc * h + i) * w + j;
        const double LL = ll[s], LH = lh[s], HL = hl[s], HH = hh[s];
        const std::size_t dst = (bc * H + 2 * i) * W + 2 * j;
        x[dst] = kHalf * (LL + LH + HL + HH);
        x[dst + 1] = kHalf * (LL + LH - HL - HH);
        x[dst + W] = kHalf * (LL - LH + HL - HH);
        x[dst + W + 1] = kHalf * (LL - LH - HL + HH);
      }
    }
  }
  return x;
}

void place(Tensor& dst, const Tensor& block, std::size_t row0, std::size_t col0) {
  const std::size_t BC = block.dim(0) * block.dim(1), h = block.dim(2), w = block.dim(3);
  const std::size_t H = dst.dim(2), W = dst.dim(3);
  for (std::size_t bc = 0; bc < BC; ++bc)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) dst[(bc * H + row0 + i) * W + col0 + j] = block[(bc * h + i) * w + j];
}

Tensor take(const Tensor& src, std::size_t row0, std::size_t col0, std::size_t h, std::size_t w) {
  const std::size_t B = src.dim(0), C = src.dim(1), H = src.dim(2), W = src.dim(3);
  Tensor out(Shape{B, C, h, w});
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) out[(bc * h + i) * w + j] = src[(bc * H + row0 + i) * W + col0 + j];
  return out;
}

void check_divisible(const Tensor& x, std::size_t levels, const char* who) {
  if (x.rank() != 4) throw DimensionError(std::string(who) + " expects B x C x H x W");
  const std::size_t f = std::size_t{1} << levels;
  if (levels == 0 || x.dim(2) % f != 0 || x.dim(3) % f != 0) {
    throw DimensionError(std::string(who) + ": spatial size " + shape_string(x.shape()) + " not divisible by " +
                         std::to_string(f));
  }
}

}  // namespace

SubbandSet dwt2(const Tensor& x, std::size_t levels) {
  check_divisible(x, levels, "dwt2");
  SubbandSet s;
  Tensor current = x;
  for (std::size_t j = 0; j < levels; ++j) {
    HaarLevel lvl = haar_analysis(current);
    s.details.push_back({std::move(lvl.lh), std::move(lvl.hl), std::move(lvl.hh)});
    current = std::move(lvl.ll);
  }
  s.approx = std::move(current);
  return s;
}

Tensor idwt2(const SubbandSet& s) {
  if (s.details.empty()) throw DimensionError("idwt2: no detail levels");
  Tensor current = s.approx;
  for (std::size_t j = s.levels(); j-- > 0;) {
    const auto& d = s.details[j];
    current = haar_synthesis(current, d[0], d[1], d[2]);
  }
  return current;
}

Tensor rearrange_subbands(const SubbandSet& s) {
  const Tensor& lvl1 = s.detail(1, Band::LH);
  const std::size_t H = 2 * lvl1.dim(2), W = 2 * lvl1.dim(3);
  Tensor out(Shape{lvl1.dim(0), lvl1.dim(1), H, W});
  place(out, s.approx, 0, 0);
  for (std::size_t j = 1; j <= s.levels(); ++j) {
    const std::size_t h = H >> j, w = W >> j;
    place(out, s.detail(j, Band::HL), 0, w);
    place(out, s.detail(j, Band::LH), h, 0);
    place(out, s.detail(j, Band::HH), h, w);
  }
  return out;
}

SubbandSet split_subbands(const Tensor& h, std::size_t levels) {
  check_divisible(h, levels, "split_subbands");
  const std::size_t H = h.dim(2), W = h.dim(3);
  SubbandSet s;
  for (std::size_t j = 1; j <= levels; ++j) {
    const std::size_t bh = H >> j, bw = W >> j;
    s.details.push_back({take(h, bh, 0, bh, bw), take(h, 0, bw, bh, bw), take(h, bh, bw, bh, bw)});
  }
  s.approx = take(h, 0, 0, H >> levels, W >> levels);
  return s;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::span<std::complex<double>> a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw DimensionError("fft length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    for (std::size_t k = 0; k < len / 2; ++k) {
      // Twiddles computed directly rather than by repeated multiplication.
      const std::complex<double> wk(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
      for (std::size_t i = 0; i < n; i += len) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * wk;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

namespace {

// Full complex 2-D transform of one padded plane, row-major, in place.
void fft2_plane(std::vector<std::complex<double>>& plane, std::size_t H, std::size_t W, bool inverse) {
  for (std::size_t r = 0; r < H; ++r) fft_inplace(std::span(plane).subspan(r * W, W), inverse);
  std::vector<std::complex<double>> col(H);
  for (std::size_t c = 0; c < W; ++c) {
    for (std::size_t r = 0; r < H; ++r) col[r] = plane[r * W + c];
    fft_inplace(col, inverse);
    for (std::size_t r = 0; r < H; ++r) plane[r * W + c] = col[r];
  }
}

}  // namespace

Spectrum rfft2(const Tensor& x) {
  if (x.rank() != 4) throw DimensionError("rfft2 expects B x C x H x W");
  const std::size_t BC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t PH = next_pow2(H), PW = next_pow2(W), HW = PW / 2 + 1;
  Spectrum s{Tensor({x.dim(0), x.dim(1), PH, HW}), Tensor({x.dim(0), x.dim(1), PH, HW}), H, W};
  std::vector<std::complex<double>> plane(PH * PW);
  for (std::size_t bc = 0; bc < BC; ++bc) {
    std::fill(plane.begin(), plane.end(), std::complex<double>{});
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) plane[r * PW + c] = x[(bc * H + r) * W + c];
    fft2_plane(plane, PH, PW, false);
    for (std::size_t r = 0; r < PH; ++r) {
      for (std::size_t c = 0; c < HW; ++c) {
        const std::size_t dst = (bc * PH + r) * HW + c;
        s.magnitude[dst] = std::abs(plane[r * PW + c]);
        s.phase[dst] = std::arg(plane[r * PW + c]);
      }
    }
  }
  return s;
}

Tensor irfft2(const Spectrum& s) {
  if (s.magnitude.shape() != s.phase.shape() || s.magnitude.rank() != 4) {
    throw DimensionError("irfft2: magnitude and phase shapes differ");
  }
  const std::size_t B = s.magnitude.dim(0), C = s.magnitude.dim(1);
  const std::size_t PH = s.magnitude.dim(2), HW = s.magnitude.dim(3), PW = 2 * (HW - 1);
  if (PW == 0 || next_pow2(PH) != PH || next_pow2(PW) != PW || s.height > PH || s.width > PW) {
    throw DimensionError("irfft2: inconsistent spectrum geometry");
  }
  Tensor out(Shape{B, C, s.height, s.width});
  std::vector<std::complex<double>> plane(PH * PW);
  const double norm = 1.0 / static_cast<double>(PH * PW);
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    for (std::size_t r = 0; r < PH; ++r) {
      for (std::size_t c = 0; c < HW; ++c) {
        const std::size_t src = (bc * PH + r) * HW + c;
        const double m = s.magnitude[src], ph = s.phase[src];
        plane[r * PW + c] = {m * std::cos(ph), m * std::sin(ph)};
      }
    }
    // Hermitian completion of the redundant half.
    for (std::size_t r = 0; r < PH; ++r) {
      for (std::size_t c = HW; c < PW; ++c) plane[r * PW + c] = std::conj(plane[((PH - r) % PH) * PW + (PW - c)]);
    }
    fft2_plane(plane, PH, PW, true);
    for (std::size_t r = 0; r < s.height; ++r)
      for (std::size_t c = 0; c < s.width; ++c) out[(bc * s.height + r) * s.width + c] = plane[r * PW + c].real() * norm;
  }
  return out;
}

Tensor delta_kernel(std::size_t out_channels, std::size_t in_per_group, std::size_t kernel, bool depthwise) {
  Tensor w(Shape{out_channels, in_per_group, kernel, kernel});
  const std::size_t mid = kernel / 2;
  for (std::size_t c = 0; c < out_channels; ++c) w(c, depthwise ? 0 : c, mid, mid) = 1.0;
  return w;
}

FftRefineParams FftRefineParams::identity(std::size_t channels) {
  const auto C = static_cast<Eigen::Index>(channels);
  return {delta_kernel(channels, channels, 3, false), Eigen::VectorXd::Zero(C),
          delta_kernel(channels, channels, 3, false), Eigen::VectorXd::Zero(C),
          delta_kernel(channels, 1, 3, true),         Eigen::VectorXd::Zero(C)};
}

FftRefineParams FftRefineParams::random(const ParamSet& ps, std::string_view prefix, std::size_t channels) {
  FftRefineParams p = identity(channels);
  const std::string pre(prefix);
  const double s_full = 0.05 / std::sqrt(9.0 * static_cast<double>(channels));
  p.denoise1_w = p.denoise1_w + ps.tensor(pre + ".denoise1", p.denoise1_w.shape(), s_full);
  p.denoise2_w = p.denoise2_w + ps.tensor(pre + ".denoise2", p.denoise2_w.shape(), s_full);
  p.depthwise_w = p.depthwise_w + ps.tensor(pre + ".depthwise", p.depthwise_w.shape(), 0.05);
  return p;
}

Tensor spectral_denoise(const Tensor& x, const FftRefineParams& p) {
  Spectrum s = rfft2(x);
  Tensor m = conv2d(s.magnitude, p.denoise1_w, p.denoise1_b);
  m = conv2d(relu(m), p.denoise2_w, p.denoise2_b);
  s.magnitude = std::move(m);
  return irfft2(s);
}

Tensor fft_refine(const Tensor& x, const FftRefineParams& p) {
  return conv2d(spectral_denoise(x, p), p.depthwise_w, p.depthwise_b, ConvSpec{.stride = 1, .padding = std::nullopt, .groups = x.dim(1)});
}

}  // namespace mclf
