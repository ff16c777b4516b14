#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sbssl/encoder.hpp"

namespace sbssl {

// Head-averaged class-token attention from one block, reduced to the patch
// grid and min-max normalized into [0,1] (a constant grid maps to zeros).
struct AttentionMap {
  int layer = 0;  // 1-indexed source block
  int grid_h = 0;
  int grid_w = 0;
  std::vector<double> grid;  // grid_h * grid_w values in [0,1]
};

// Block 10 when the stack is deep enough, otherwise round(5L/6): the same
// relative depth in shallower desk-scale stacks. Always in [1, depth].
int default_attention_layer(int depth);

// outputs must have been produced with attention recording enabled. The
// class-token query row of the chosen block is averaged over heads, its
// class-token self-entry dropped, and the n patch entries reshaped to the
// patch grid. Throws ConfigError for a layer out of range or missing
// attention tensors.
AttentionMap attention_map(const BlockOutputs& outputs, const PatchConfig& patch, int layer);

// Convenience: encode_image with recording on, then attention_map; layer <= 0
// selects default_attention_layer(depth).
AttentionMap attention_map_for_image(const Tensor& image, const EncoderState& state,
                                     int layer = 0);

// Bilinear upsample of the grid to height x width (align_corners, so grid
// corners land on image corners), mapped through the "hot" color ramp
// (black -> red -> yellow -> white), alpha-blended over the grayscale slice.
// Returns interleaved RGB bytes, row-major.
std::vector<std::uint8_t> render_overlay(const AttentionMap& map,
                                         const std::vector<double>& slice, int height, int width,
                                         double alpha = 0.5);

// render_overlay written as a PNG.
void write_overlay_png(const AttentionMap& map, const std::vector<double>& slice, int height,
                       int width, const std::filesystem::path& path, double alpha = 0.5);

// The raw map as an 8-bit grayscale PGM at grid resolution.
void write_map_pgm(const AttentionMap& map, const std::filesystem::path& path);

}  // namespace sbssl
