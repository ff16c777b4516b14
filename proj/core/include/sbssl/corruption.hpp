#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sbssl/rng.hpp"
#include "sbssl/tensor.hpp"

namespace sbssl {

/// How masked pixels are filled and how much of the image may be masked.
struct CorruptionSpec {
  enum class Mode { zeros, ones, noise };

  Mode mode = Mode::zeros;
  double ratio_max = 0.70;
  // Rectangular patch groups, sides drawn uniformly from this range.
  int group_min = 1;
  int group_max = 6;

  void validate() const;
  static Mode parse_mode(std::string_view name);
  static std::string mode_name(Mode mode);
};

/// Placement record of one rectangular patch group, in patch-grid units.
struct GroupRect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  int area() const { return height * width; }
};

/// A patch-aligned corruption mask. The pixel mask is exactly the p x p
/// expansion of the patch mask; no partially masked patch can exist. The
/// group list records every placement so tests can replay the stop rule.
struct CorruptionMask {
  int grid_h = 0;
  int grid_w = 0;
  int patch_size = 0;
  std::vector<std::uint8_t> patch_mask;  // grid_h * grid_w, 1 = manipulated
  std::vector<std::uint8_t> pixel_mask;  // (grid_h*p) * (grid_w*p)
  std::vector<GroupRect> groups;
  double target_ratio = 0.0;

  int masked_patches() const;
  /// Fraction of patches (equivalently pixels) set to 1.
  double coverage() const;
  bool patch_at(int row, int col) const;
  bool pixel_at(int y, int x) const;
};

/// Draws a target ratio ~ Uniform[0, ratio_max), then stamps random
/// rectangles (overlap allowed) until coverage first reaches the target.
/// Coverage can overshoot the target by at most the final group's area.
CorruptionMask sample_mask(int grid_h, int grid_w, int patch_size, const CorruptionSpec& spec,
                           Rng& rng);

/// Fills masked pixels with 0, 1, or i.i.d. Uniform[0,1) draws; unmasked
/// pixels are copied bit-identically. Noise is drawn in channel-major,
/// row-major scan order over masked pixels only.
Tensor apply_corruption(const Tensor& image, const CorruptionMask& mask,
                        const CorruptionSpec& spec, Rng& rng);

/// The mask as a [channels,H,W] tensor of 0/1 values for the masked loss.
Tensor mask_tensor(const CorruptionMask& mask, int channels);

}  // namespace sbssl
