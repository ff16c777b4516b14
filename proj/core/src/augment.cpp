#include "sbssl/augment.hpp"

#include <algorithm>
#include <cmath>

#include "sbssl/errors.hpp"
#include "sbssl/imaging.hpp"

namespace sbssl {

AugmentConfig AugmentConfig::disabled() {
  AugmentConfig c;
  c.crop = false;
  c.hflip = false;
  c.blur = false;
  c.sharpness = false;
  c.contrast = false;
  return c;
}

void AugmentConfig::validate() const {
  auto check_range = [](double lo, double hi, const char* what) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ConfigError(std::string("augment: bad range for ") + what);
    }
  };
  check_range(crop_scale_min, crop_scale_max, "crop_scale");
  if (crop && (crop_scale_min <= 0.0 || crop_scale_max > 1.0)) {
    throw ConfigError("augment: crop_scale must lie in (0, 1]");
  }
  check_range(sigma_min, sigma_max, "sigma");
  if (blur && sigma_min < 0.0) throw ConfigError("augment: sigma_min must be >= 0");
  check_range(sharpness_min, sharpness_max, "sharpness");
  check_range(contrast_min, contrast_max, "contrast");
}

namespace {

// 3x3 smoothing used by the sharpness transform: weights [[1,1,1],[1,5,1],[1,1,1]]/13.
// Border pixels are copied from the input unchanged.
std::vector<double> smooth3x3(const std::vector<double>& src, int h, int w) {
  std::vector<double> out = src;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      double acc = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double weight = (dy == 0 && dx == 0) ? 5.0 : 1.0;
          acc += weight * src[static_cast<std::size_t>(y + dy) * w + (x + dx)];
        }
      }
      out[static_cast<std::size_t>(y) * w + x] = acc / 13.0;
    }
  }
  return out;
}

}  // namespace

std::vector<double> augment(const std::vector<double>& image, int height, int width,
                            const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (image.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ShapeError("augment: raster size mismatch");
  }
  std::vector<double> out = image;

  if (config.crop) {
    const double scale = rng.uniform(config.crop_scale_min, config.crop_scale_max);
    const double side = std::sqrt(scale);  // scale is an area fraction
    int crop_h = std::clamp(static_cast<int>(std::lround(height * side)), 1, height);
    int crop_w = std::clamp(static_cast<int>(std::lround(width * side)), 1, width);
    const int row0 = (crop_h < height) ? static_cast<int>(rng.next_below(
                                             static_cast<std::uint64_t>(height - crop_h + 1)))
                                       : 0;
    const int col0 = (crop_w < width) ? static_cast<int>(rng.next_below(
                                            static_cast<std::uint64_t>(width - crop_w + 1)))
                                      : 0;
    std::vector<double> cropped(static_cast<std::size_t>(crop_h) * crop_w);
    for (int y = 0; y < crop_h; ++y) {
      const double* src_row = out.data() + static_cast<std::size_t>(row0 + y) * width + col0;
      std::copy(src_row, src_row + crop_w, cropped.data() + static_cast<std::size_t>(y) * crop_w);
    }
    out = bilinear_resize(cropped, crop_h, crop_w, height, width, /*align_corners=*/false);
  }

  if (config.hflip) {
    if (rng.bernoulli(0.5)) {
      for (int y = 0; y < height; ++y) {
        std::reverse(out.begin() + static_cast<std::ptrdiff_t>(y) * width,
                     out.begin() + static_cast<std::ptrdiff_t>(y + 1) * width);
      }
    }
  }

  if (config.blur) {
    const double sigma = rng.uniform(config.sigma_min, config.sigma_max);
    out = gaussian_blur(out, height, width, sigma);
  }

  if (config.sharpness) {
    const double factor = rng.uniform(config.sharpness_min, config.sharpness_max);
    const std::vector<double> smooth = smooth3x3(out, height, width);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = smooth[i] + factor * (out[i] - smooth[i]);
    }
  }

  if (config.contrast) {
    const double factor = rng.uniform(config.contrast_min, config.contrast_max);
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= static_cast<double>(out.size());
    for (double& v : out) v = mean + factor * (v - mean);
  }

  clamp01(out);
  return out;
}

}  // namespace sbssl
