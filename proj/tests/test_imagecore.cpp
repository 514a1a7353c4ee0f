// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

#include <gtest/gtest.h>

#include <random>

#include "autocam/imagecore.hpp"
#include "test_util.hpp"

using namespace autocam;
using namespace autocam::testing;

TEST(Image, RejectsTinyAndMismatchedBuffers) {
  EXPECT_THROW(Image(7, 8, std::vector<std::uint8_t>(56)), Error);
  try {
    Image(8, 7, std::vector<std::uint8_t>(56));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ImageTooSmall);
  }
  try {
    Image(8, 8, std::vector<std::uint8_t>(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidArgument);
  }
}

TEST(Image, QuantizeRoundsHalfUpAndClamps) {
  EXPECT_EQ(quantize(-3.0), 0);
  EXPECT_EQ(quantize(0.49), 0);
  EXPECT_EQ(quantize(0.5), 1);
  EXPECT_EQ(quantize(254.5), 255);
  EXPECT_EQ(quantize(1e9), 255);
  EXPECT_EQ(quantize(std::nan("")), 0);
}

TEST(Gradient, MatchesDirectSobel) {
  std::mt19937 rng(11);
  for (int t = 0; t < 10; ++t) {
    const auto img = random_image(rng, 8 + t, 9 + 2 * t);
    const auto got = gradient_magnitude_sq(img);
    const auto want = sobel_sq(img);
    ASSERT_EQ(got.values.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.values[i], want[i], 1e-12);
  }
}

TEST(Gradient, FlatImageHasNoGradient) {
  const auto g = gradient_magnitude_sq(Image::filled(16, 12, 77));
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, VerticalStepValue) {
  // 0 | 255 step: at the columns next to the edge gx = 4 (on [0,1] scale).
  std::vector<std::uint8_t> px(16 * 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 8; x < 16; ++x) px[y * 16 + x] = 255;
  }
  const auto g = gradient_magnitude_sq(Image(16, 8, px));
  EXPECT_DOUBLE_EQ(g.at(7, 4), 16.0);
  EXPECT_DOUBLE_EQ(g.at(8, 4), 16.0);
  EXPECT_DOUBLE_EQ(g.at(3, 4), 0.0);
}

TEST(Entropy, MatchesDirectHistogram) {
  std::mt19937 rng(5);
  for (int window : {3, 5, 7, 15}) {
    const auto img = random_image(rng, 20, 17);
    const auto got = local_entropy(img, window);
    const auto want = entropy_map(img, window);
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got.values[i], want[i], 1e-12);
  }
}

TEST(Entropy, BoundsAndFlatImage) {
  std::mt19937 rng(6);
  const auto e = local_entropy(random_image(rng, 32, 32), 5);
  for (double v : e.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : local_entropy(Image::filled(10, 10, 200), 5).values) EXPECT_EQ(v, 0.0);
}

TEST(Entropy, TwoEqualBinsGiveQuarter) {
  // Alternating columns of bins 0 and 15 on a 3x3 window: 6 vs 3 samples.
  std::vector<std::uint8_t> px(10 * 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) px[y * 10 + x] = x % 2 ? 255 : 0;
  }
  const auto e = local_entropy(Image(10, 10, px), 3);
  const double p = 1.0 / 3.0;
  const double want = -(p * std::log2(p) + (1 - p) * std::log2(1 - p)) / 4.0;
  EXPECT_NEAR(e.at(4, 4), want, 1e-12);
}

TEST(Entropy, RejectsBadWindow) {
  const auto img = Image::filled(16, 16, 1);
  EXPECT_THROW(local_entropy(img, 4), Error);
  EXPECT_THROW(local_entropy(img, 1), Error);
  EXPECT_THROW(local_entropy(img, 17), Error);
}

TEST(PatchStats, MatchesTwoPassMoments) {
  std::mt19937 rng(9);
  const auto img = random_image(rng, 37, 21);
  const auto got = patch_stats(img, 8);
  ASSERT_EQ(got.size(), 4u * 2u);
  for (int by = 0; by < 2; ++by) {
    for (int bx = 0; bx < 4; ++bx) {
      double m = 0.0;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) m += img.at(bx * 8 + x, by * 8 + y);
      }
      m /= 64.0;
      double v = 0.0;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) v += std::pow(img.at(bx * 8 + x, by * 8 + y) - m, 2);
      }
      const auto& s = got[by * 4 + bx];
      EXPECT_NEAR(s.mean, m, 1e-12);
      EXPECT_NEAR(s.stddev, std::sqrt(v / 64.0), 1e-10);
    }
  }
  EXPECT_THROW(patch_stats(img, 32), Error);
  EXPECT_THROW(patch_stats(img, 3), Error);
}

TEST(Downsample, MatchesBlockMeanOracle) {
  std::mt19937 rng(3);
  const auto img = random_image(rng, 67, 50);
  for (int f : {2, 3, 4, 6}) {
    const auto d = downsample(img, f);
    ASSERT_EQ(d.width(), 67 / f);
    ASSERT_EQ(d.height(), 50 / f);
    for (int y = 0; y < d.height(); ++y) {
      for (int x = 0; x < d.width(); ++x) {
        double s = 0.0;
        for (int j = 0; j < f; ++j) {
          for (int i = 0; i < f; ++i) s += img.at(x * f + i, y * f + j);
        }
        ASSERT_EQ(d.at(x, y), static_cast<int>(std::floor(s / (f * f) + 0.5)));
      }
    }
  }
}

TEST(Downsample, IdentityAndMetadata) {
  std::mt19937 rng(4);
  auto img = random_image(rng, 16, 16);
  img.meta().exposure_ms = 7.0;
  EXPECT_EQ(downsample(img, 1), img);
  EXPECT_EQ(downsample(img, 2).meta(), img.meta());
  EXPECT_THROW(downsample(img, 3), Error);  // 5x5 < 8x8
  EXPECT_THROW(downsample(img, 0), Error);
}

TEST(Downsample, ComposesOnBlockConstantImages) {
  // With 2x2-constant input the first halving is exact, so halving twice
  // equals quartering once. On general input rounding breaks this.
  std::mt19937 rng(8);
  const auto base = random_image(rng, 32, 24);
  std::vector<std::uint8_t> px(64 * 48);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) px[y * 64 + x] = base.at(x / 2, y / 2);
  }
  const Image img(64, 48, px);
  EXPECT_TRUE(same_pixels(downsample(downsample(img, 2), 2), downsample(img, 4)));
}
