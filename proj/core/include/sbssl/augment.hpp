#pragma once

#include <vector>

#include "sbssl/rng.hpp"

namespace sbssl {

// Per-slice stochastic augmentation for training. Transforms are applied in a
// fixed order -- crop-resize, horizontal flip, Gaussian blur, sharpness,
// contrast -- and every enabled transform draws its parameters from `rng` in
// that same order, so toggling one flag never shifts the draws of another
// within a single augment() call.
struct AugmentConfig {
  bool crop = true;           // random area crop, resized back to the input size
  double crop_scale_min = 0.8;
  double crop_scale_max = 1.0;
  bool hflip = true;          // mirror columns with probability 1/2
  bool blur = true;           // Gaussian blur, sigma ~ U(sigma_min, sigma_max)
  double sigma_min = 0.1;
  double sigma_max = 2.0;
  bool sharpness = true;      // factor ~ U(range); 1 = identity, 0 = smoothed
  double sharpness_min = 0.5;
  double sharpness_max = 1.5;
  bool contrast = true;       // factor ~ U(range); 1 = identity, 0 = flat mean
  double contrast_min = 0.75;
  double contrast_max = 1.25;

  // All transforms off: augment() becomes the identity and consumes no draws.
  static AugmentConfig disabled();

  void validate() const;  // throws ConfigError
};

// Augments one single-channel raster in place semantics-wise (returns a new
// buffer). Output values are clamped to [0,1] once, after the last transform.
std::vector<double> augment(const std::vector<double>& image, int height, int width,
                            const AugmentConfig& config, Rng& rng);

}  // namespace sbssl
