#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tomo/error.hpp"
#include "tomo/metrics.hpp"

namespace {

using tomo::GrayImage;

GrayImage noise(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  GrayImage img(n, n);
  for (auto& v : img.pixels()) v = d(rng);
  return img;
}

GrayImage blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  GrayImage img(n, n);
  for (int b = 0; b < 4; ++b) {
    const double cx = d(rng) * n, cy = d(rng) * n, rad = 3.0 + d(rng) * n / 4.0, v = d(rng);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        if ((r - cy) * (r - cy) + (c - cx) * (c - cx) < rad * rad) img(r, c) = v;
      }
    }
  }
  return img;
}

TEST(Metrics, RmseMatchesOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = noise(40, seed), b = noise(40, seed + 100);
    EXPECT_NEAR(tomo::rmse(a, b), oracle::rmse(a, b), 1e-12);
    EXPECT_NEAR(tomo::mse(a, b), oracle::rmse(a, b) * oracle::rmse(a, b), 1e-12);
  }
  EXPECT_EQ(tomo::rmse(noise(16, 1), noise(16, 1)), 0.0);
}

TEST(Metrics, SsimMatchesDirectWindowOracle) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto a = blobs(48, seed);
    auto b = a;
    const auto n = noise(48, seed + 7, -0.2, 0.2);
    for (std::size_t i = 0; i < b.size(); ++i) b.pixels()[i] += n.pixels()[i];
    EXPECT_NEAR(tomo::ssim(a, b), oracle::ssim(a, b), 1e-9);
    EXPECT_NEAR(tomo::ssim(a, blobs(48, seed + 50)), oracle::ssim(a, blobs(48, seed + 50)), 1e-9);
  }
}

TEST(Metrics, SsimOfIdenticalImagesIsOne) {
  const auto a = blobs(64, 3);
  EXPECT_NEAR(tomo::ssim(a, a), 1.0, 1e-12);
}

TEST(Metrics, SsimOfInvertedImageIsLow) {
  const auto a = noise(64, 4);
  GrayImage inv(64, 64);
  for (std::size_t i = 0; i < a.size(); ++i) inv.pixels()[i] = 1.0 - a.pixels()[i];
  EXPECT_LT(tomo::ssim(a, inv), 0.1);
}

TEST(Metrics, SsimIgnoresLuminanceShiftOfConstants) {
  const GrayImage a(32, 32, 0.2), b(32, 32, 0.7);
  EXPECT_NEAR(tomo::ssim(a, b), 1.0, 1e-9);
}

TEST(Metrics, SsimIsSymmetricAndBounded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = seed % 2 ? noise(32, seed) : blobs(32, seed);
    const auto b = noise(32, seed + 500);
    const double ab = tomo::ssim(a, b);
    EXPECT_NEAR(ab, tomo::ssim(b, a), 1e-12);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(Metrics, SsimInvariantUnderCommonShift) {
  const auto a = blobs(48, 8), b = noise(48, 9);
  GrayImage a2 = a, b2 = b;
  for (auto& v : a2.pixels()) v += 0.3;
  for (auto& v : b2.pixels()) v += 0.3;
  EXPECT_NEAR(tomo::ssim(a, b), tomo::ssim(a2, b2), 1e-6);
}

TEST(Metrics, PsnrValues) {
  const GrayImage zero(20, 20, 0.0), tenth(20, 20, 0.1), one(20, 20, 1.0);
  EXPECT_NEAR(tomo::psnr(zero, tenth), 20.0, 1e-9);
  EXPECT_NEAR(tomo::psnr(zero, one), 0.0, 1e-12);
  EXPECT_TRUE(std::isinf(tomo::psnr(tenth, tenth)));
  EXPECT_GT(tomo::psnr(tenth, tenth), 0.0);
  EXPECT_NEAR(tomo::psnr(zero, GrayImage(20, 20, 0.2), 2.0), 20.0, 1e-9);
}

TEST(Metrics, EvaluateBundlesAllMetrics) {
  const auto a = blobs(32, 1), b = noise(32, 2);
  const auto report = tomo::evaluate(a, b);
  EXPECT_EQ(report.rmse, tomo::rmse(a, b));
  EXPECT_EQ(report.ssim, tomo::ssim(a, b));
  EXPECT_EQ(report.psnr, tomo::psnr(a, b));
  EXPECT_FALSE(report.psnr_infinite());
  EXPECT_TRUE(tomo::evaluate(a, a).psnr_infinite());
}

TEST(Metrics, ShapeMismatchIsRejected) {
  const GrayImage a(32, 32), b(32, 31), tiny(8, 8);
  EXPECT_THROW(tomo::rmse(a, b), tomo::ShapeError);
  EXPECT_THROW(tomo::ssim(a, b), tomo::ShapeError);
  EXPECT_THROW(tomo::psnr(a, b), tomo::ShapeError);
  EXPECT_THROW(tomo::ssim(tiny, tiny), tomo::ShapeError);
}

TEST(Metrics, DefaultConstantsFollowPeak) {
  const auto p = tomo::SsimParams::defaults(2.0);
  EXPECT_DOUBLE_EQ(p.m1, 4e-4);
  EXPECT_DOUBLE_EQ(p.m2, 36e-4);
  EXPECT_DOUBLE_EQ(p.m3, 18e-4);
  tomo::SsimParams bad;
  bad.window = 4;
  EXPECT_THROW(bad.validate(), tomo::ConfigError);
}

}  // namespace
