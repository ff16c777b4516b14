#include "sbssl/corruption.hpp"

#include <algorithm>

#include "sbssl/errors.hpp"

namespace sbssl {

void CorruptionSpec::validate() const {
  if (ratio_max < 0.0 || ratio_max > 1.0) {
    throw ConfigError("corruption: ratio_max " + std::to_string(ratio_max) + " outside [0,1]");
  }
  if (group_min < 1 || group_max < group_min) {
    throw ConfigError("corruption: group side range [" + std::to_string(group_min) + "," +
                      std::to_string(group_max) + "] invalid");
  }
}

CorruptionSpec::Mode CorruptionSpec::parse_mode(std::string_view name) {
  if (name == "zeros") return Mode::zeros;
  if (name == "ones") return Mode::ones;
  if (name == "noise") return Mode::noise;
  throw ConfigError("corruption: unknown mode \"" + std::string(name) + "\"");
}

std::string CorruptionSpec::mode_name(Mode mode) {
  switch (mode) {
    case Mode::zeros: return "zeros";
    case Mode::ones: return "ones";
    case Mode::noise: return "noise";
  }
  throw ConfigError("corruption: unknown mode value");
}

int CorruptionMask::masked_patches() const {
  int count = 0;
  for (std::uint8_t bit : patch_mask) count += bit;
  return count;
}

double CorruptionMask::coverage() const {
  if (patch_mask.empty()) return 0.0;
  return static_cast<double>(masked_patches()) / static_cast<double>(patch_mask.size());
}

bool CorruptionMask::patch_at(int row, int col) const {
  return patch_mask[static_cast<std::size_t>(row) * static_cast<std::size_t>(grid_w) +
                    static_cast<std::size_t>(col)] != 0;
}

bool CorruptionMask::pixel_at(int y, int x) const {
  return pixel_mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(grid_w * patch_size) +
                    static_cast<std::size_t>(x)] != 0;
}

CorruptionMask sample_mask(int grid_h, int grid_w, int patch_size, const CorruptionSpec& spec,
                           Rng& rng) {
  spec.validate();
  if (grid_h < 1 || grid_w < 1 || patch_size < 1) {
    throw ConfigError("sample_mask: grid " + std::to_string(grid_h) + "x" +
                      std::to_string(grid_w) + ", patch " + std::to_string(patch_size));
  }

  CorruptionMask mask;
  mask.grid_h = grid_h;
  mask.grid_w = grid_w;
  mask.patch_size = patch_size;
  mask.patch_mask.assign(static_cast<std::size_t>(grid_h) * static_cast<std::size_t>(grid_w), 0);
  mask.target_ratio = rng.uniform(0.0, spec.ratio_max);

  const int total = grid_h * grid_w;
  const int h_lo = std::min(spec.group_min, grid_h);
  const int h_hi = std::min(spec.group_max, grid_h);
  const int w_lo = std::min(spec.group_min, grid_w);
  const int w_hi = std::min(spec.group_max, grid_w);

  int covered = 0;
  // Stop at the first placement that reaches the target, so coverage can
  // exceed it by at most that one group's area.
  while (static_cast<double>(covered) < mask.target_ratio * static_cast<double>(total)) {
    GroupRect rect;
    rect.height = rng.uniform_int(h_lo, h_hi);
    rect.width = rng.uniform_int(w_lo, w_hi);
    rect.row = rng.uniform_int(0, grid_h - rect.height);
    rect.col = rng.uniform_int(0, grid_w - rect.width);
    for (int r = rect.row; r < rect.row + rect.height; ++r) {
      for (int c = rect.col; c < rect.col + rect.width; ++c) {
        std::uint8_t& bit = mask.patch_mask[static_cast<std::size_t>(r) * static_cast<std::size_t>(grid_w) +
                                            static_cast<std::size_t>(c)];
        covered += 1 - bit;
        bit = 1;
      }
    }
    mask.groups.push_back(rect);
  }

  const int ph = grid_h * patch_size;
  const int pw = grid_w * patch_size;
  mask.pixel_mask.assign(static_cast<std::size_t>(ph) * static_cast<std::size_t>(pw), 0);
  for (int r = 0; r < grid_h; ++r) {
    for (int c = 0; c < grid_w; ++c) {
      if (!mask.patch_at(r, c)) continue;
      for (int y = r * patch_size; y < (r + 1) * patch_size; ++y) {
        std::fill_n(mask.pixel_mask.begin() + static_cast<std::ptrdiff_t>(y) * pw + c * patch_size,
                    patch_size, static_cast<std::uint8_t>(1));
      }
    }
  }
  return mask;
}

Tensor apply_corruption(const Tensor& image, const CorruptionMask& mask,
                        const CorruptionSpec& spec, Rng& rng) {
  const int h = mask.grid_h * mask.patch_size;
  const int w = mask.grid_w * mask.patch_size;
  if (image.rank() != 3 || image.dim(1) != h || image.dim(2) != w) {
    throw ShapeError("apply_corruption: image " + shape_str(image.shape()) + " vs mask " +
                     std::to_string(h) + "x" + std::to_string(w));
  }

  std::vector<double> out = image.data();
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  for (int c = 0; c < image.dim(0); ++c) {
    double* channel = out.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask.pixel_mask[i] == 0) continue;
      switch (spec.mode) {
        case CorruptionSpec::Mode::zeros: channel[i] = 0.0; break;
        case CorruptionSpec::Mode::ones: channel[i] = 1.0; break;
        case CorruptionSpec::Mode::noise: channel[i] = rng.uniform(); break;
      }
    }
  }
  return Tensor::from_data(image.shape(), std::move(out));
}

Tensor mask_tensor(const CorruptionMask& mask, int channels) {
  const int h = mask.grid_h * mask.patch_size;
  const int w = mask.grid_w * mask.patch_size;
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  std::vector<double> values(static_cast<std::size_t>(channels) * plane);
  for (int c = 0; c < channels; ++c) {
    double* channel = values.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) channel[i] = mask.pixel_mask[i] ? 1.0 : 0.0;
  }
  return Tensor::from_data({channels, h, w}, std::move(values));
}

}  // namespace sbssl
