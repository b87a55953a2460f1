#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "mclf/freq.hpp"
#include "mclf/ops.hpp"
#include "test_util.hpp"

using namespace mclf;

namespace {

double energy(const Tensor& t) {
  double e = 0.0;
  for (double v : t.data()) e += v * v;
  return e;
}

double energy(const SubbandSet& s) {
  double e = energy(s.approx);
  for (const auto& lvl : s.details)
    for (const Tensor& b : lvl) e += energy(b);
  return e;
}

// Direct 2x2 block filters for one level: returns {LL, LH, HL, HH}.
std::array<Tensor, 4> haar_oracle(const Tensor& x) {
  const std::size_t H = x.dim(2) / 2, W = x.dim(3) / 2;
  std::array<Tensor, 4> out{Tensor({1, 1, H, W}), Tensor({1, 1, H, W}), Tensor({1, 1, H, W}), Tensor({1, 1, H, W})};
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      const double a = x(0, 0, 2 * i, 2 * j), b = x(0, 0, 2 * i, 2 * j + 1);
      const double c = x(0, 0, 2 * i + 1, 2 * j), d = x(0, 0, 2 * i + 1, 2 * j + 1);
      out[0](0, 0, i, j) = (a + b + c + d) / 2.0;
      out[1](0, 0, i, j) = (a + b - c - d) / 2.0;  // row difference
      out[2](0, 0, i, j) = (a - b + c - d) / 2.0;  // column difference
      out[3](0, 0, i, j) = (a - b - c + d) / 2.0;
    }
  return out;
}

}  // namespace

TEST(DwtTest, ConstantImageHasOnlyApproximation) {
  const double c = 0.75;
  const SubbandSet s = dwt2(Tensor({1, 2, 8, 8}, c), 2);
  // each orthonormal level multiplies a constant by 2
  for (double v : s.approx.data()) EXPECT_NEAR(v, 4.0 * c, 1e-15);
  for (const auto& lvl : s.details)
    for (const Tensor& b : lvl)
      for (double v : b.data()) EXPECT_EQ(v, 0.0);
}

TEST(DwtTest, LevelOneMatchesBlockOracle) {
  std::mt19937_64 gen(1);
  const Tensor x = testutil::uniform(gen, {1, 1, 8, 12});
  const SubbandSet s = dwt2(x, 1);
  const auto ref = haar_oracle(x);
  EXPECT_LT(max_abs_diff(s.approx, ref[0]), 1e-15);
  EXPECT_LT(max_abs_diff(s.detail(1, Band::LH), ref[1]), 1e-15);
  EXPECT_LT(max_abs_diff(s.detail(1, Band::HL), ref[2]), 1e-15);
  EXPECT_LT(max_abs_diff(s.detail(1, Band::HH), ref[3]), 1e-15);
}

TEST(DwtTest, StepAcrossColumnsLandsInVerticalDetail) {
  // value jumps between columns 4 and 5, inside a 2x2 block
  Tensor x({1, 1, 8, 8});
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 5; j < 8; ++j) x(0, 0, i, j) = 1.0;
  const SubbandSet s = dwt2(x, 1);
  const auto ref = haar_oracle(x);
  EXPECT_GT(energy(s.detail(1, Band::HL)), 0.5);
  EXPECT_LT(max_abs_diff(s.detail(1, Band::HL), ref[2]), 1e-15);
  EXPECT_EQ(energy(s.detail(1, Band::LH)), 0.0);
  EXPECT_EQ(energy(s.detail(1, Band::HH)), 0.0);
}

TEST(DwtTest, EnergyConserved) {
  std::mt19937_64 gen(2);
  const Tensor x = testutil::uniform(gen, {2, 3, 16, 32});
  EXPECT_NEAR(energy(dwt2(x, 2)), energy(x), 1e-8);
}

TEST(DwtTest, PerfectReconstruction) {
  std::mt19937_64 gen(3);
  for (const Shape& shape : {Shape{1, 4, 32, 32}, Shape{2, 1, 4, 8}, Shape{1, 3, 12, 20}}) {
    const Tensor x = testutil::uniform(gen, shape);
    EXPECT_LT(max_abs_diff(idwt2(dwt2(x, 2)), x), 1e-8);
  }
  const Tensor y = testutil::uniform(gen, {1, 1, 16, 16});
  EXPECT_LT(max_abs_diff(idwt2(dwt2(y, 3)), y), 1e-8);
}

TEST(DwtTest, ZeroAndLinearity) {
  std::mt19937_64 gen(4);
  const Tensor zero = idwt2(dwt2(Tensor({1, 1, 8, 8}), 2));
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);

  const Tensor x = testutil::uniform(gen, {1, 1, 8, 8});
  SubbandSet t = dwt2(x, 2);
  const double m0 = mean(idwt2(t));
  t.approx = t.approx * 2.0;
  // detail bands have zero mean, so the mean comes from LL alone
  EXPECT_NEAR(mean(idwt2(t)), 2.0 * m0, 1e-12);
}

TEST(DwtTest, IndivisibleIsDimensionError) {
  EXPECT_THROW(dwt2(Tensor({1, 1, 6, 8}), 2), DimensionError);
  EXPECT_THROW(dwt2(Tensor({1, 1, 8, 5}), 1), DimensionError);
}

TEST(SubbandLayoutTest, Bijection) {
  std::mt19937_64 gen(5);
  const Tensor x = testutil::uniform(gen, {1, 2, 16, 8});
  const SubbandSet s = dwt2(x, 2);
  const Tensor h = rearrange_subbands(s);
  EXPECT_EQ(h.size(), x.size());
  const SubbandSet back = split_subbands(h, 2);
  EXPECT_EQ(back.approx, s.approx);
  for (std::size_t j = 1; j <= 2; ++j)
    for (Band b : {Band::LH, Band::HL, Band::HH}) EXPECT_EQ(back.detail(j, b), s.detail(j, b));
}

TEST(SubbandLayoutTest, QuadrantPositions) {
  std::mt19937_64 gen(6);
  const SubbandSet s = dwt2(testutil::uniform(gen, {1, 1, 16, 16}), 2);
  const Tensor h = rearrange_subbands(s);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(h(0, 0, i, j), s.approx(0, 0, i, j));
      EXPECT_EQ(h(0, 0, i, 4 + j), s.detail(2, Band::HL)(0, 0, i, j));
      EXPECT_EQ(h(0, 0, 4 + i, j), s.detail(2, Band::LH)(0, 0, i, j));
      EXPECT_EQ(h(0, 0, 4 + i, 4 + j), s.detail(2, Band::HH)(0, 0, i, j));
    }
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      EXPECT_EQ(h(0, 0, i, 8 + j), s.detail(1, Band::HL)(0, 0, i, j));
      EXPECT_EQ(h(0, 0, 8 + i, j), s.detail(1, Band::LH)(0, 0, i, j));
      EXPECT_EQ(h(0, 0, 8 + i, 8 + j), s.detail(1, Band::HH)(0, 0, i, j));
    }
}

TEST(FftTest, OneDimensionalMatchesNaive) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<std::complex<double>> a(16);
  for (auto& v : a) v = {d(gen), d(gen)};
  auto f = a;
  fft_inplace(f, false);
  for (std::size_t k = 0; k < 16; ++k) {
    std::complex<double> ref = 0.0;
    for (std::size_t n = 0; n < 16; ++n) ref += a[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / 16.0);
    EXPECT_LT(std::abs(f[k] - ref), 1e-12);
  }
  fft_inplace(f, true);
  for (std::size_t n = 0; n < 16; ++n) EXPECT_LT(std::abs(f[n] / 16.0 - a[n]), 1e-14);
  std::vector<std::complex<double>> bad(6);
  EXPECT_THROW(fft_inplace(bad, false), DimensionError);
}

TEST(FftTest, HalfSpectrumMatchesNaiveDftAndParseval) {
  std::mt19937_64 gen(8);
  const std::size_t N = 8;
  const Tensor x = testutil::uniform(gen, {1, 1, N, N});
  const Spectrum s = rfft2(x);
  ASSERT_EQ(s.magnitude.shape(), (Shape{1, 1, N, N / 2 + 1}));
  const auto ref = testutil::naive_dft2(x.values(), N, N);
  double full = 0.0, half = 0.0;
  for (std::size_t u = 0; u < N; ++u)
    for (std::size_t v = 0; v < N; ++v) full += std::norm(ref[u * N + v]);
  for (std::size_t u = 0; u < N; ++u)
    for (std::size_t v = 0; v <= N / 2; ++v) {
      const auto got = std::polar(s.magnitude(0, 0, u, v), s.phase(0, 0, u, v));
      EXPECT_LT(std::abs(got - ref[u * N + v]), 1e-12);
      EXPECT_GE(s.magnitude(0, 0, u, v), 0.0);
      half += (v == 0 || v == N / 2 ? 1.0 : 2.0) * std::norm(got);
    }
  const double e = energy(x);
  EXPECT_LT(std::abs(full / (N * N) - e) / e, 1e-6);
  EXPECT_LT(std::abs(half / (N * N) - e) / e, 1e-6);
}

TEST(FftTest, ConstantHasOnlyDc) {
  const Spectrum s = rfft2(Tensor({1, 1, 8, 8}, 0.3));
  for (std::size_t u = 0; u < 8; ++u)
    for (std::size_t v = 0; v < 5; ++v) {
      if (u == 0 && v == 0) {
        EXPECT_NEAR(s.magnitude(0, 0, u, v), 64 * 0.3, 1e-12);
      } else {
        EXPECT_LT(s.magnitude(0, 0, u, v), 1e-12);
      }
    }
}

TEST(FftTest, RoundTripIncludingPaddedSizes) {
  std::mt19937_64 gen(9);
  for (const Shape& shape : {Shape{1, 2, 8, 8}, Shape{1, 1, 32, 32}, Shape{2, 1, 6, 10}, Shape{1, 1, 1, 3}}) {
    const Tensor x = testutil::uniform(gen, shape);
    const Spectrum s = rfft2(x);
    EXPECT_EQ(s.height, shape[2]);
    EXPECT_EQ(s.width, shape[3]);
    EXPECT_LT(max_abs_diff(irfft2(s), x), 1e-8) << shape_string(shape);
  }
}

TEST(FftRefineTest, IdentityStackReproducesInput) {
  std::mt19937_64 gen(10);
  const Tensor x = testutil::uniform(gen, {1, 4, 8, 12});
  EXPECT_LT(max_abs_diff(fft_refine(x, FftRefineParams::identity(4)), x), 1e-8);
}

TEST(FftRefineTest, IdentityDenoiserLeavesDepthwiseConv) {
  std::mt19937_64 gen(11);
  const Tensor x = testutil::uniform(gen, {1, 3, 8, 8});
  FftRefineParams p = FftRefineParams::identity(3);
  p.depthwise_w = testutil::uniform(gen, {3, 1, 3, 3});
  const Tensor r = fft_refine(x, p);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) {
        double acc = 0.0;
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            const long y = static_cast<long>(i) + di, xx = static_cast<long>(j) + dj;
            if (y < 0 || xx < 0 || y >= 8 || xx >= 8) continue;
            acc += p.depthwise_w(c, 0, di + 1, dj + 1) * x(0, c, y, xx);
          }
        ASSERT_NEAR(r(0, c, i, j), acc, 1e-8);
      }
}

TEST(FftRefineTest, DenoiserKeepsPhase) {
  std::mt19937_64 gen(12);
  const Tensor x = testutil::uniform(gen, {1, 2, 8, 8});
  FftRefineParams p = FftRefineParams::identity(2);
  p.denoise1_w = p.denoise1_w * 1.5;  // positive scaling passes the relu
  const Tensor y = spectral_denoise(x, p);
  const Spectrum sx = rfft2(x), sy = rfft2(y);
  for (std::size_t k = 0; k < sx.phase.size(); ++k) {
    if (sy.magnitude[k] <= 1e-12) continue;
    const double d = std::remainder(sy.phase[k] - sx.phase[k], 2.0 * std::numbers::pi);
    EXPECT_LT(std::abs(d), 1e-6);
    EXPECT_NEAR(sy.magnitude[k], 1.5 * sx.magnitude[k], 1e-9);
  }
}

TEST(FftRefineTest, ShapePreservedForRandomParams) {
  std::mt19937_64 gen(13);
  const Tensor x = testutil::uniform(gen, {1, 6, 4, 6});
  const Tensor y = fft_refine(x, FftRefineParams::random(ParamSet(3), "r", 6));
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_TRUE(y.all_finite());
}
