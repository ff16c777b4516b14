#include "sbssl/corruption.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "sbssl/errors.hpp"
#include "sbssl/rng.hpp"

using sbssl::CorruptionMask;
using sbssl::CorruptionSpec;
using sbssl::GroupRect;
using sbssl::Tensor;

namespace {

CorruptionSpec default_spec(CorruptionSpec::Mode mode = CorruptionSpec::Mode::zeros) {
  CorruptionSpec spec;
  spec.mode = mode;
  return spec;
}

/// Union of the recorded rectangles, built independently of the sampler.
std::vector<std::uint8_t> union_of_rects(const CorruptionMask& mask) {
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(mask.grid_h * mask.grid_w), 0);
  for (const GroupRect& rect : mask.groups) {
    for (int r = rect.row; r < rect.row + rect.height; ++r) {
      for (int c = rect.col; c < rect.col + rect.width; ++c) {
        grid[static_cast<std::size_t>(r * mask.grid_w + c)] = 1;
      }
    }
  }
  return grid;
}

/// Flood fill (4-connectivity) from a seed over set patches; returns the
/// number of cells of `rect` that the fill reaches.
int flood_reaches(const CorruptionMask& mask, const GroupRect& rect) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(mask.grid_h * mask.grid_w), 0);
  std::deque<std::pair<int, int>> queue;
  queue.emplace_back(rect.row, rect.col);
  seen[static_cast<std::size_t>(rect.row * mask.grid_w + rect.col)] = 1;
  int inside = 0;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    if (r >= rect.row && r < rect.row + rect.height && c >= rect.col && c < rect.col + rect.width) {
      ++inside;
    }
    const int dr[] = {1, -1, 0, 0};
    const int dc[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k];
      const int nc = c + dc[k];
      if (nr < 0 || nr >= mask.grid_h || nc < 0 || nc >= mask.grid_w) continue;
      const std::size_t at = static_cast<std::size_t>(nr * mask.grid_w + nc);
      if (seen[at] || mask.patch_mask[at] == 0) continue;
      seen[at] = 1;
      queue.emplace_back(nr, nc);
    }
  }
  return inside;
}

}  // namespace

TEST(SampleMask, ZeroRatioGivesEmptyMask) {
  CorruptionSpec spec = default_spec();
  spec.ratio_max = 0.0;
  sbssl::Rng rng = sbssl::Rng::derive(3, {1});
  CorruptionMask mask = sbssl::sample_mask(16, 16, 16, spec, rng);
  EXPECT_EQ(mask.masked_patches(), 0);
  EXPECT_TRUE(mask.groups.empty());
  EXPECT_EQ(std::count(mask.pixel_mask.begin(), mask.pixel_mask.end(), 1), 0);
}

TEST(SampleMask, WholeGridGroupFillsEverything) {
  CorruptionSpec spec = default_spec();
  spec.ratio_max = 1.0;
  spec.group_min = 16;
  spec.group_max = 16;
  sbssl::Rng rng = sbssl::Rng::derive(3, {2});
  CorruptionMask mask = sbssl::sample_mask(16, 16, 4, spec, rng);
  ASSERT_GT(mask.target_ratio, 0.0);  // a zero draw would make the test vacuous
  EXPECT_EQ(mask.masked_patches(), 256);
  EXPECT_DOUBLE_EQ(mask.coverage(), 1.0);
}

TEST(SampleMask, PixelMaskIsExactPatchExpansion) {
  sbssl::Rng rng = sbssl::Rng::derive(3, {3});
  CorruptionMask mask = sbssl::sample_mask(8, 8, 4, default_spec(), rng);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      EXPECT_EQ(mask.pixel_at(y, x), mask.patch_at(y / 4, x / 4));
    }
  }
}

TEST(SampleMask, RecordedGroupsReproduceTheMask) {
  sbssl::Rng rng = sbssl::Rng::derive(3, {4});
  for (int i = 0; i < 50; ++i) {
    CorruptionMask mask = sbssl::sample_mask(16, 16, 2, default_spec(), rng);
    // No stray bits: the mask is exactly the union of the recorded groups.
    EXPECT_EQ(union_of_rects(mask), mask.patch_mask);
    for (const GroupRect& rect : mask.groups) {
      EXPECT_GE(rect.height, 1);
      EXPECT_LE(rect.height, 6);
      EXPECT_GE(rect.width, 1);
      EXPECT_LE(rect.width, 6);
      EXPECT_GE(rect.row, 0);
      EXPECT_GE(rect.col, 0);
      EXPECT_LE(rect.row + rect.height, 16);
      EXPECT_LE(rect.col + rect.width, 16);
      // Every cell of the rectangle is reachable by flood fill from its
      // corner, so each group is 4-connected within the mask.
      EXPECT_EQ(flood_reaches(mask, rect), rect.area());
    }
  }
}

TEST(SampleMask, StopsAtFirstReachAndOvershootIsBounded) {
  sbssl::Rng rng = sbssl::Rng::derive(3, {5});
  for (int i = 0; i < 200; ++i) {
    CorruptionMask mask = sbssl::sample_mask(16, 16, 2, default_spec(), rng);
    const int total = 16 * 16;
    // Replay the placements: every proper prefix must sit below the target.
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(total), 0);
    int covered = 0;
    for (std::size_t g = 0; g < mask.groups.size(); ++g) {
      if (g > 0) {
        EXPECT_LT(static_cast<double>(covered), mask.target_ratio * total)
            << "group " << g << " placed after the target was already reached";
      }
      const GroupRect& rect = mask.groups[g];
      for (int r = rect.row; r < rect.row + rect.height; ++r) {
        for (int c = rect.col; c < rect.col + rect.width; ++c) {
          std::uint8_t& bit = grid[static_cast<std::size_t>(r * 16 + c)];
          covered += 1 - bit;
          bit = 1;
        }
      }
    }
    EXPECT_EQ(covered, mask.masked_patches());
    EXPECT_GE(static_cast<double>(covered), mask.target_ratio * total);
    if (!mask.groups.empty()) {
      const double overshoot = mask.coverage() - mask.target_ratio;
      EXPECT_LE(overshoot, static_cast<double>(mask.groups.back().area()) / total + 1e-12);
    }
  }
}

TEST(SampleMask, MonteCarloCoverageCentersNearHalfRatioMax) {
  sbssl::Rng rng = sbssl::Rng::derive(3, {6});
  double total_coverage = 0.0;
  double max_coverage = 0.0;
  const int samples = 1000;
  for (int i = 0; i < samples; ++i) {
    CorruptionMask mask = sbssl::sample_mask(16, 16, 2, default_spec(), rng);
    total_coverage += mask.coverage();
    max_coverage = std::max(max_coverage, mask.coverage());
  }
  const double mean = total_coverage / samples;
  // Target ~ U(0, 0.70) has mean 0.35; stopping overshoot adds a little.
  // Band frozen from the first run of this sampler.
  EXPECT_GT(mean, 0.32);
  EXPECT_LT(mean, 0.42);
  // No sample may exceed the hard bound: target max plus one 6x6 group.
  EXPECT_LE(max_coverage, 0.70 + 36.0 / 256.0);
}

TEST(SampleMask, DeterministicGivenSeed) {
  sbssl::Rng rng1 = sbssl::Rng::derive(99, {1, 2});
  sbssl::Rng rng2 = sbssl::Rng::derive(99, {1, 2});
  CorruptionMask a = sbssl::sample_mask(16, 16, 2, default_spec(), rng1);
  CorruptionMask b = sbssl::sample_mask(16, 16, 2, default_spec(), rng2);
  EXPECT_EQ(a.patch_mask, b.patch_mask);
  EXPECT_EQ(a.target_ratio, b.target_ratio);
  ASSERT_EQ(a.groups.size(), b.groups.size());
}

TEST(SampleMask, RejectsBadArguments) {
  sbssl::Rng rng = sbssl::Rng::derive(3, {7});
  CorruptionSpec bad = default_spec();
  bad.ratio_max = 1.5;
  EXPECT_THROW(sbssl::sample_mask(4, 4, 2, bad, rng), sbssl::ConfigError);
  CorruptionSpec order = default_spec();
  order.group_min = 4;
  order.group_max = 2;
  EXPECT_THROW(sbssl::sample_mask(4, 4, 2, order, rng), sbssl::ConfigError);
  EXPECT_THROW(sbssl::sample_mask(0, 4, 2, default_spec(), rng), sbssl::ConfigError);
}

namespace {

Tensor random_image(int channels, int size, std::uint64_t seed) {
  sbssl::Rng rng = sbssl::Rng::derive(seed, {40});
  std::vector<double> values(static_cast<std::size_t>(channels * size * size));
  for (double& v : values) v = rng.uniform();
  return Tensor::from_data({channels, size, size}, std::move(values));
}

CorruptionMask mask_with_coverage(int grid, int patch, double min_cov, std::uint64_t seed) {
  // Walks seeds deterministically until the sampled mask is busy enough.
  for (std::uint64_t attempt = 0;; ++attempt) {
    sbssl::Rng rng = sbssl::Rng::derive(seed, {41, attempt});
    CorruptionMask mask = sbssl::sample_mask(grid, grid, patch, default_spec(), rng);
    if (mask.coverage() >= min_cov && mask.coverage() < 0.9) return mask;
  }
}

}  // namespace

TEST(ApplyCorruption, EmptyMaskIsIdentity) {
  CorruptionSpec spec = default_spec();
  spec.ratio_max = 0.0;
  sbssl::Rng rng = sbssl::Rng::derive(3, {8});
  CorruptionMask mask = sbssl::sample_mask(8, 8, 4, spec, rng);
  Tensor image = random_image(1, 32, 101);
  Tensor out = sbssl::apply_corruption(image, mask, spec, rng);
  for (std::size_t i = 0; i < image.numel(); ++i) {
    EXPECT_EQ(out.data()[i], image.data()[i]);
  }
}

TEST(ApplyCorruption, ZerosModeLeavesUnmaskedPixelsBitIdentical) {
  CorruptionSpec spec = default_spec(CorruptionSpec::Mode::zeros);
  sbssl::Rng rng = sbssl::Rng::derive(3, {9});
  CorruptionMask mask = mask_with_coverage(8, 4, 0.25, 11);
  Tensor image = random_image(1, 32, 102);
  Tensor out = sbssl::apply_corruption(image, mask, spec, rng);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const std::size_t at = static_cast<std::size_t>(y * 32 + x);
      if (mask.pixel_at(y, x)) {
        EXPECT_EQ(out.data()[at], 0.0);
      } else {
        EXPECT_EQ(out.data()[at], image.data()[at]);
      }
    }
  }
}

TEST(ApplyCorruption, OnesModeWritesMaxIntensity) {
  CorruptionSpec spec = default_spec(CorruptionSpec::Mode::ones);
  sbssl::Rng rng = sbssl::Rng::derive(3, {10});
  CorruptionMask mask = mask_with_coverage(8, 4, 0.25, 12);
  Tensor image = random_image(1, 32, 103);
  Tensor out = sbssl::apply_corruption(image, mask, spec, rng);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const std::size_t at = static_cast<std::size_t>(y * 32 + x);
      if (mask.pixel_at(y, x)) {
        EXPECT_EQ(out.data()[at], 1.0);
      } else {
        EXPECT_EQ(out.data()[at], image.data()[at]);
      }
    }
  }
}

TEST(ApplyCorruption, FullMaskZerosGivesZeroImage) {
  CorruptionSpec spec = default_spec();
  spec.ratio_max = 1.0;
  spec.group_min = 8;
  spec.group_max = 8;
  sbssl::Rng rng = sbssl::Rng::derive(3, {11});
  CorruptionMask mask = sbssl::sample_mask(8, 8, 4, spec, rng);
  ASSERT_DOUBLE_EQ(mask.coverage(), 1.0);
  Tensor image = random_image(1, 32, 104);
  Tensor out = sbssl::apply_corruption(image, mask, spec, rng);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(ApplyCorruption, NoiseFollowsUniformLaw) {
  CorruptionSpec spec = default_spec(CorruptionSpec::Mode::noise);
  sbssl::Rng rng = sbssl::Rng::derive(3, {12});
  CorruptionMask mask = mask_with_coverage(16, 2, 0.30, 13);
  Tensor image = random_image(1, 32, 105);
  Tensor out = sbssl::apply_corruption(image, mask, spec, rng);

  std::vector<double> masked_values;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const std::size_t at = static_cast<std::size_t>(y * 32 + x);
      if (mask.pixel_at(y, x)) {
        masked_values.push_back(out.data()[at]);
      } else {
        EXPECT_EQ(out.data()[at], image.data()[at]);
      }
    }
  }
  ASSERT_GE(masked_values.size(), 200u);

  // One-sample Kolmogorov-Smirnov against Uniform[0,1), alpha = 0.01.
  std::sort(masked_values.begin(), masked_values.end());
  const double n = static_cast<double>(masked_values.size());
  double d_stat = 0.0;
  for (std::size_t i = 0; i < masked_values.size(); ++i) {
    const double x = masked_values[i];
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    const double hi = (static_cast<double>(i) + 1.0) / n - x;
    const double lo = x - static_cast<double>(i) / n;
    d_stat = std::max({d_stat, hi, lo});
  }
  EXPECT_LT(d_stat, 1.62762 / std::sqrt(n));
}

TEST(ApplyCorruption, ShapeMismatchThrows) {
  CorruptionSpec spec = default_spec();
  sbssl::Rng rng = sbssl::Rng::derive(3, {13});
  CorruptionMask mask = sbssl::sample_mask(8, 8, 4, spec, rng);
  Tensor wrong = random_image(1, 16, 106);
  EXPECT_THROW(sbssl::apply_corruption(wrong, mask, spec, rng), sbssl::ShapeError);
}

TEST(MaskTensor, MatchesPixelMask) {
  sbssl::Rng rng = sbssl::Rng::derive(3, {14});
  CorruptionMask mask = sbssl::sample_mask(4, 4, 2, default_spec(), rng);
  Tensor m = sbssl::mask_tensor(mask, 1);
  ASSERT_EQ(m.shape(), (std::vector<int>{1, 8, 8}));
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      EXPECT_DOUBLE_EQ(m.at({0, y, x}), mask.pixel_at(y, x) ? 1.0 : 0.0);
    }
  }
}
