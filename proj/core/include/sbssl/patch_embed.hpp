#pragma once

#include <cstdint>

#include "sbssl/rng.hpp"
#include "sbssl/tensor.hpp"

namespace sbssl {

/// Geometry of the tokenization: square images cut into a grid of square,
/// non-overlapping patches, each projected to embed_dim.
struct PatchConfig {
  int image_size = 256;
  int patch_size = 16;
  int embed_dim = 192;
  int channels = 1;

  int grid() const { return image_size / patch_size; }
  int tokens() const { return grid() * grid(); }
  int patch_dim() const { return channels * patch_size * patch_size; }
  /// image_size must be divisible by patch_size.
  void validate() const;
};

/// The patch projection is a p x p / stride p convolution, which on a
/// non-overlapping grid is exactly a (C*p*p) x K matrix applied per patch.
struct PatchProjection {
  Tensor weight;  // [C*p*p, K]
  Tensor bias;    // [K]

  static PatchProjection init(const PatchConfig& config, Rng& rng);
};

/// [C,H,W] -> [n, C*p*p], patches in row-major grid order.
Tensor image_to_patches(const Tensor& image, const PatchConfig& config);

/// Inverse of image_to_patches; also the stride-p transposed convolution's
/// scatter step used by the decoder output layer.
Tensor patches_to_image(const Tensor& patches, const PatchConfig& config);

/// [C,H,W] -> [n,K]: cut into patches and linearly project each one.
Tensor patchify(const Tensor& image, const PatchProjection& proj, const PatchConfig& config);

/// [n,K] + class token [1,K] + positions [(n+1),K] -> [(n+1),K].
/// Index 0 is the class token; patch i sits at index i+1. The position table
/// is added exactly once, here.
Tensor assemble_sequence(const Tensor& patches, const Tensor& class_token,
                         const Tensor& pos_embed);

}  // namespace sbssl
