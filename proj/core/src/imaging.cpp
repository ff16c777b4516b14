#include "sbssl/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "sbssl/errors.hpp"

namespace sbssl {

std::vector<double> bilinear_resize(const std::vector<double>& src, int src_h, int src_w,
                                    int dst_h, int dst_w, bool align_corners) {
  if (src_h < 1 || src_w < 1 || dst_h < 1 || dst_w < 1 ||
      src.size() != static_cast<std::size_t>(src_h) * static_cast<std::size_t>(src_w)) {
    throw ShapeError("bilinear_resize: " + std::to_string(src_h) + "x" + std::to_string(src_w) +
                     " -> " + std::to_string(dst_h) + "x" + std::to_string(dst_w));
  }
  std::vector<double> dst(static_cast<std::size_t>(dst_h) * static_cast<std::size_t>(dst_w));

  auto source_coord = [align_corners](int d, int dst_n, int src_n) {
    if (align_corners) {
      if (src_n == 1 || dst_n == 1) return 0.0;
      return static_cast<double>(d) * (src_n - 1) / static_cast<double>(dst_n - 1);
    }
    const double scale = static_cast<double>(src_n) / static_cast<double>(dst_n);
    return std::max(0.0, (d + 0.5) * scale - 0.5);
  };

  for (int y = 0; y < dst_h; ++y) {
    const double sy = source_coord(y, dst_h, src_h);
    const int y0 = std::min(static_cast<int>(sy), src_h - 1);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double sx = source_coord(x, dst_w, src_w);
      const int x0 = std::min(static_cast<int>(sx), src_w - 1);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double fx = sx - x0;
      const double top = src[static_cast<std::size_t>(y0) * src_w + x0] * (1.0 - fx) +
                         src[static_cast<std::size_t>(y0) * src_w + x1] * fx;
      const double bottom = src[static_cast<std::size_t>(y1) * src_w + x0] * (1.0 - fx) +
                            src[static_cast<std::size_t>(y1) * src_w + x1] * fx;
      dst[static_cast<std::size_t>(y) * dst_w + x] = top * (1.0 - fy) + bottom * fy;
    }
  }
  return dst;
}

std::vector<double> gaussian_blur(const std::vector<double>& src, int height, int width,
                                  double sigma) {
  if (src.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ShapeError("gaussian_blur: raster size mismatch");
  }
  if (sigma <= 0.0) return src;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i / sigma) * (i / sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  auto reflect = [](int i, int n) {
    // Reflect without repeating the border sample: -1 -> 1, n -> n-2.
    while (i < 0 || i >= n) {
      if (i < 0) i = -i;
      if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
  };

  std::vector<double> rows(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               src[static_cast<std::size_t>(y) * width + reflect(x + k, width)];
      }
      rows[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  std::vector<double> out(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               rows[static_cast<std::size_t>(reflect(y + k, height)) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

std::vector<double> min_max_normalize(const std::vector<double>& src) {
  if (src.empty()) return {};
  double lo = src[0];
  double hi = src[0];
  for (double v : src) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out(src.size(), 0.0);
  const double range = hi - lo;
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = (src[i] - lo) / range;
  return out;
}

void clamp01(std::vector<double>& values) {
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace sbssl
