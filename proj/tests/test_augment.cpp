#include "sbssl/augment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sbssl/errors.hpp"
#include "sbssl/imaging.hpp"
#include "sbssl/rng.hpp"

namespace sbssl {
namespace {

std::vector<double> test_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> img(static_cast<std::size_t>(h) * w);
  for (double& v : img) v = rng.uniform();
  return img;
}

TEST(Imaging, ResizeToSameSizeIsIdentity) {
  const auto img = test_image(7, 5, 1);
  for (bool corners : {false, true}) {
    const auto out = bilinear_resize(img, 7, 5, 7, 5, corners);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_DOUBLE_EQ(out[i], img[i]);
  }
}

TEST(Imaging, AlignCornersPreservesCornerValues) {
  const std::vector<double> grid = {0.1, 0.9, 0.4, 0.6};
  const auto up = bilinear_resize(grid, 2, 2, 4, 4, /*align_corners=*/true);
  EXPECT_DOUBLE_EQ(up[0], 0.1);
  EXPECT_DOUBLE_EQ(up[3], 0.9);
  EXPECT_DOUBLE_EQ(up[12], 0.4);
  EXPECT_DOUBLE_EQ(up[15], 0.6);
  // Interior values interpolate linearly between the corners.
  EXPECT_NEAR(up[1], 0.1 + (0.9 - 0.1) / 3.0, 1e-12);
}

TEST(Imaging, ResizePreservesConstants) {
  const std::vector<double> flat(6 * 9, 0.37);
  for (bool corners : {false, true}) {
    for (const auto& out : {bilinear_resize(flat, 6, 9, 13, 4, corners),
                            bilinear_resize(flat, 6, 9, 2, 17, corners)}) {
      for (double v : out) EXPECT_NEAR(v, 0.37, 1e-12);
    }
  }
}

TEST(Imaging, ResizeValuesStayWithinInputHull) {
  const auto img = test_image(9, 11, 2);
  const double lo = *std::min_element(img.begin(), img.end());
  const double hi = *std::max_element(img.begin(), img.end());
  const auto out = bilinear_resize(img, 9, 11, 23, 6, /*align_corners=*/false);
  for (double v : out) {
    EXPECT_GE(v, lo - 1e-12);
    EXPECT_LE(v, hi + 1e-12);
  }
}

TEST(Imaging, BlurPreservesConstantsAndMass) {
  const std::vector<double> flat(8 * 8, 0.42);
  const auto out = gaussian_blur(flat, 8, 8, 1.3);
  for (double v : out) EXPECT_NEAR(v, 0.42, 1e-12);
}

TEST(Imaging, BlurWithZeroSigmaIsIdentity) {
  const auto img = test_image(6, 6, 3);
  const auto out = gaussian_blur(img, 6, 6, 0.0);
  EXPECT_EQ(out, img);
}

TEST(Imaging, BlurSpreadsAPointSymmetrically) {
  std::vector<double> img(9 * 9, 0.0);
  img[4 * 9 + 4] = 1.0;
  const auto out = gaussian_blur(img, 9, 9, 1.0);
  EXPECT_LT(out[4 * 9 + 4], 1.0);
  EXPECT_GT(out[4 * 9 + 4], out[4 * 9 + 5]);
  EXPECT_NEAR(out[4 * 9 + 5], out[4 * 9 + 3], 1e-12);  // left-right symmetry
  EXPECT_NEAR(out[3 * 9 + 4], out[5 * 9 + 4], 1e-12);  // up-down symmetry
  EXPECT_NEAR(out[4 * 9 + 5], out[5 * 9 + 4], 1e-12);  // separable kernel is isotropic
  double total = 0.0;
  for (double v : out) total += v;
  // Reflect padding keeps the kernel mass inside the raster away from edges;
  // a centered point in a 9x9 raster with radius 3 loses nothing.
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Imaging, MinMaxNormalizeMapsExtremesAndConstants) {
  const auto out = min_max_normalize({2.0, 4.0, 3.0});
  EXPECT_DOUBLE_EQ(out[0], 0.0);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
  EXPECT_DOUBLE_EQ(out[2], 0.5);
  const auto flat = min_max_normalize({5.0, 5.0});
  EXPECT_DOUBLE_EQ(flat[0], 0.0);
  EXPECT_DOUBLE_EQ(flat[1], 0.0);
}

TEST(Augment, AllFlagsOffIsIdentityAndConsumesNoDraws) {
  const auto img = test_image(16, 16, 4);
  Rng rng(9);
  Rng witness(9);
  const auto out = augment(img, 16, 16, AugmentConfig::disabled(), rng);
  EXPECT_EQ(out, img);
  EXPECT_EQ(rng.next_u64(), witness.next_u64());  // stream untouched
}

TEST(Augment, FlipOnlyIsColumnReversalOrIdentity) {
  const auto img = test_image(8, 6, 5);
  std::vector<double> mirrored = img;
  for (int y = 0; y < 8; ++y) {
    std::reverse(mirrored.begin() + y * 6, mirrored.begin() + (y + 1) * 6);
  }
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.hflip = true;
  int flips = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto out = augment(img, 8, 6, cfg, rng);
    const bool flipped = out == mirrored;
    EXPECT_TRUE(flipped || out == img);
    flips += flipped ? 1 : 0;
  }
  EXPECT_GT(flips, 5);  // both outcomes occur
  EXPECT_LT(flips, 35);
}

TEST(Augment, TwoFiredFlipsComposeToIdentity) {
  const auto img = test_image(5, 7, 6);
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.hflip = true;
  int composed = 0;
  for (std::uint64_t s = 0; s < 64 && composed < 5; ++s) {
    Rng first(s);
    const auto once = augment(img, 5, 7, cfg, first);
    if (once == img) continue;  // flip did not fire on this seed
    for (std::uint64_t t = 0; t < 64; ++t) {
      Rng second(1000 + t);
      const auto twice = augment(once, 5, 7, cfg, second);
      if (twice == once) continue;
      EXPECT_EQ(twice, img);
      ++composed;
      break;
    }
  }
  EXPECT_GE(composed, 5);
}

TEST(Augment, FullScaleCropIsIdentity) {
  const auto img = test_image(12, 12, 7);
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.crop = true;
  cfg.crop_scale_min = 1.0;
  cfg.crop_scale_max = 1.0;
  Rng rng(11);
  const auto out = augment(img, 12, 12, cfg, rng);
  ASSERT_EQ(out.size(), img.size());
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-12);
}

TEST(Augment, TinySigmaBlurIsNearIdentity) {
  const auto img = test_image(10, 10, 8);
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.blur = true;
  cfg.sigma_min = 1e-6;
  cfg.sigma_max = 1e-6;
  Rng rng(13);
  const auto out = augment(img, 10, 10, cfg, rng);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-6);
}

TEST(Augment, UnitFactorsAreIdentity) {
  const auto img = test_image(9, 9, 9);
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.sharpness = true;
  cfg.sharpness_min = cfg.sharpness_max = 1.0;
  cfg.contrast = true;
  cfg.contrast_min = cfg.contrast_max = 1.0;
  Rng rng(17);
  const auto out = augment(img, 9, 9, cfg, rng);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-12);
}

TEST(Augment, ZeroContrastCollapsesToTheMean) {
  const auto img = test_image(6, 6, 10);
  double mean = 0.0;
  for (double v : img) mean += v;
  mean /= static_cast<double>(img.size());
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.contrast = true;
  cfg.contrast_min = cfg.contrast_max = 0.0;
  Rng rng(19);
  const auto out = augment(img, 6, 6, cfg, rng);
  for (double v : out) EXPECT_NEAR(v, mean, 1e-12);
}

TEST(Augment, SharpnessBordersComeFromTheInputUnchanged) {
  const auto img = test_image(7, 7, 11);
  AugmentConfig cfg = AugmentConfig::disabled();
  cfg.sharpness = true;
  cfg.sharpness_min = cfg.sharpness_max = 0.0;  // pure 3x3 smooth
  Rng rng(23);
  const auto out = augment(img, 7, 7, cfg, rng);
  for (int x = 0; x < 7; ++x) {
    EXPECT_DOUBLE_EQ(out[static_cast<std::size_t>(x)], img[static_cast<std::size_t>(x)]);
    EXPECT_DOUBLE_EQ(out[static_cast<std::size_t>(6 * 7 + x)], img[static_cast<std::size_t>(6 * 7 + x)]);
  }
  // Interior is the weighted neighborhood mean.
  double acc = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      acc += ((dy == 0 && dx == 0) ? 5.0 : 1.0) * img[static_cast<std::size_t>((3 + dy) * 7 + 3 + dx)];
    }
  }
  EXPECT_NEAR(out[3 * 7 + 3], acc / 13.0, 1e-12);
}

TEST(Augment, OutputStaysInUnitRangeUnderAggressiveSettings) {
  AugmentConfig cfg;  // everything on, defaults
  cfg.sharpness_min = 0.0;
  cfg.sharpness_max = 3.0;
  cfg.contrast_min = 0.0;
  cfg.contrast_max = 3.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto img = test_image(16, 16, 100 + seed);
    Rng rng(seed);
    const auto out = augment(img, 16, 16, cfg, rng);
    ASSERT_EQ(out.size(), img.size());
    for (double v : out) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Augment, SameSeedSameOutput) {
  const auto img = test_image(16, 16, 12);
  const AugmentConfig cfg;  // all transforms on
  Rng a(77);
  Rng b(77);
  EXPECT_EQ(augment(img, 16, 16, cfg, a), augment(img, 16, 16, cfg, b));
}

TEST(Augment, DisablingALaterTransformDoesNotShiftEarlierDraws) {
  // The crop parameters are drawn first either way, so the cropped geometry
  // must agree between "crop only" and "crop+contrast" under the same seed.
  const auto img = test_image(16, 16, 13);
  AugmentConfig crop_only = AugmentConfig::disabled();
  crop_only.crop = true;
  AugmentConfig crop_contrast = crop_only;
  crop_contrast.contrast = true;
  crop_contrast.contrast_min = crop_contrast.contrast_max = 1.0;  // identity factor
  Rng a(31);
  Rng b(31);
  const auto plain = augment(img, 16, 16, crop_only, a);
  const auto with_contrast = augment(img, 16, 16, crop_contrast, b);
  ASSERT_EQ(plain.size(), with_contrast.size());
  // A shifted crop window would move values by O(0.1); the unit-factor
  // contrast pass only adds rounding noise.
  for (std::size_t i = 0; i < plain.size(); ++i) {
    EXPECT_NEAR(plain[i], with_contrast[i], 1e-12);
  }
}

TEST(Augment, RejectsBadConfigAndShapes) {
  const auto img = test_image(4, 4, 14);
  Rng rng(1);
  AugmentConfig bad;
  bad.crop_scale_min = 1.2;
  bad.crop_scale_max = 0.3;
  EXPECT_THROW(augment(img, 4, 4, bad, rng), ConfigError);
  AugmentConfig negative_sigma;
  negative_sigma.sigma_min = -1.0;
  EXPECT_THROW(augment(img, 4, 4, negative_sigma, rng), ConfigError);
  EXPECT_THROW(augment(img, 5, 4, AugmentConfig::disabled(), rng), ShapeError);
}

}  // namespace
}  // namespace sbssl
