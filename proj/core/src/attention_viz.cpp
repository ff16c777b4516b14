#include "sbssl/attention_viz.hpp"

#include <algorithm>
#include <cmath>

#include "sbssl/errors.hpp"
#include "sbssl/image_io.hpp"
#include "sbssl/imaging.hpp"

namespace sbssl {

int default_attention_layer(int depth) {
  if (depth >= 10) return 10;
  const int layer = static_cast<int>(std::lround(5.0 * depth / 6.0));
  return std::clamp(layer, 1, depth);
}

AttentionMap attention_map(const BlockOutputs& outputs, const PatchConfig& patch, int layer) {
  if (outputs.attentions.empty()) {
    throw ConfigError("attention_map: forward pass did not record attention");
  }
  if (layer < 1 || layer > static_cast<int>(outputs.attentions.size())) {
    throw ConfigError("attention_map: layer " + std::to_string(layer) + " outside [1, " +
                      std::to_string(outputs.attentions.size()) + "]");
  }
  const Tensor& attn = outputs.attentions[static_cast<std::size_t>(layer - 1)];  // [h,T,T]
  const int heads = attn.dim(0);
  const int tokens = attn.dim(1);
  const int n = tokens - 1;
  if (n != patch.tokens()) {
    throw ShapeError("attention_map: " + std::to_string(n) + " patch tokens vs grid " +
                     std::to_string(patch.grid()) + "x" + std::to_string(patch.grid()));
  }

  AttentionMap map;
  map.layer = layer;
  map.grid_h = patch.grid();
  map.grid_w = patch.grid();
  map.grid.assign(static_cast<std::size_t>(n), 0.0);
  // Class-token query row of each head, averaged; entry 0 (attention to the
  // class token itself) is dropped and the rest follow patch scan order.
  const std::vector<double>& a = attn.data();
  for (int h = 0; h < heads; ++h) {
    const std::size_t row = (static_cast<std::size_t>(h) * tokens + 0) * tokens;
    for (int j = 0; j < n; ++j) {
      map.grid[static_cast<std::size_t>(j)] += a[row + 1 + static_cast<std::size_t>(j)];
    }
  }
  for (double& v : map.grid) v /= static_cast<double>(heads);
  map.grid = min_max_normalize(map.grid);
  return map;
}

AttentionMap attention_map_for_image(const Tensor& image, const EncoderState& state, int layer) {
  if (layer <= 0) layer = default_attention_layer(state.config.depth);
  const BlockOutputs outputs = encode_image(image, state, /*record_attention=*/true);
  return attention_map(outputs, state.patch, layer);
}

namespace {

// "Hot" ramp: t in [0,1] -> black through red and yellow to white.
void hot_rgb(double t, double rgb[3]) {
  rgb[0] = std::clamp(3.0 * t, 0.0, 1.0);
  rgb[1] = std::clamp(3.0 * t - 1.0, 0.0, 1.0);
  rgb[2] = std::clamp(3.0 * t - 2.0, 0.0, 1.0);
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

std::vector<std::uint8_t> render_overlay(const AttentionMap& map,
                                         const std::vector<double>& slice, int height, int width,
                                         double alpha) {
  if (slice.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw ShapeError("render_overlay: slice raster size mismatch");
  }
  const std::vector<double> heat =
      bilinear_resize(map.grid, map.grid_h, map.grid_w, height, width, /*align_corners=*/true);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < heat.size(); ++i) {
    double color[3];
    hot_rgb(heat[i], color);
    const double gray = std::clamp(slice[i], 0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
      rgb[i * 3 + static_cast<std::size_t>(c)] =
          quantize((1.0 - alpha) * gray + alpha * color[c]);
    }
  }
  return rgb;
}

void write_overlay_png(const AttentionMap& map, const std::vector<double>& slice, int height,
                       int width, const std::filesystem::path& path, double alpha) {
  write_png_rgb(path, width, height, render_overlay(map, slice, height, width, alpha));
}

void write_map_pgm(const AttentionMap& map, const std::filesystem::path& path) {
  std::vector<std::uint8_t> gray(map.grid.size());
  for (std::size_t i = 0; i < map.grid.size(); ++i) gray[i] = quantize(map.grid[i]);
  write_pgm(path, map.grid_w, map.grid_h, gray);
}

}  // namespace sbssl
