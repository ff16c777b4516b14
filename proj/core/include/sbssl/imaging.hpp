#pragma once

#include <vector>

namespace sbssl {

/// Bilinear resample of a single-channel raster. align_corners=true maps
/// corner centers onto corner centers (the convention for upsampling small
/// attention grids); false uses half-pixel centers (the convention for
/// photographic resize).
std::vector<double> bilinear_resize(const std::vector<double>& src, int src_h, int src_w,
                                    int dst_h, int dst_w, bool align_corners);

/// Separable Gaussian blur with reflect padding; radius = ceil(3*sigma).
/// sigma <= 0 returns the input unchanged.
std::vector<double> gaussian_blur(const std::vector<double>& src, int height, int width,
                                  double sigma);

/// Affine min-max rescale to [0,1]; a constant raster maps to all zeros.
std::vector<double> min_max_normalize(const std::vector<double>& src);

/// Clamp every value into [0,1].
void clamp01(std::vector<double>& values);

}  // namespace sbssl
