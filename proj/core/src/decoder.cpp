#include "sbssl/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbssl/errors.hpp"

namespace sbssl {

DecoderState DecoderState::init(const EncoderConfig& config, const PatchConfig& patch,
                                std::uint64_t seed) {
  config.validate();
  patch.validate();
  Rng rng = Rng::derive(seed, {rng_stream::decoder_init});
  const int k = config.embed_dim;
  DecoderState state;
  state.fc1_weight = Tensor::randn({k, k}, rng, 0.02, true);
  state.fc1_bias = Tensor::zeros({k}, true);
  state.fc2_weight = Tensor::randn({k, k}, rng, 0.02, true);
  state.fc2_bias = Tensor::zeros({k}, true);
  state.out_weight = Tensor::randn({k, patch.patch_dim()}, rng, 0.02, true);
  state.out_bias = Tensor::zeros({patch.patch_dim()}, true);
  return state;
}

std::vector<std::pair<std::string, Tensor>> DecoderState::named_parameters() const {
  return {
      {"decoder.fc1.weight", fc1_weight}, {"decoder.fc1.bias", fc1_bias},
      {"decoder.fc2.weight", fc2_weight}, {"decoder.fc2.bias", fc2_bias},
      {"decoder.out.weight", out_weight}, {"decoder.out.bias", out_bias},
  };
}

void DecoderState::register_into(AdamW& opt) const {
  for (const auto& [name, tensor] : named_parameters()) {
    const bool decay = name.find(".weight") != std::string::npos;
    opt.add_parameter(name, tensor, decay);
  }
}

std::vector<int> default_block_set(int depth) {
  if (depth <= 0) throw ConfigError("block set: depth must be positive");
  const double l = static_cast<double>(depth);
  std::vector<int> set = {
      static_cast<int>(std::lround(l / 2.0)),
      static_cast<int>(std::lround(2.0 * l / 3.0)),
      static_cast<int>(std::lround(5.0 * l / 6.0)),
      depth,
  };
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  // Depths of 1 can round the earliest fraction to zero; clamp into range.
  if (set.front() < 1) {
    for (int& b : set) b = std::max(b, 1);
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return set;
}

Tensor decode(const BlockOutputs& blocks, const std::vector<int>& block_set,
              const DecoderState& decoder, const PatchConfig& patch) {
  const int depth = static_cast<int>(blocks.block_outputs.size());
  if (block_set.empty()) throw ConfigError("decode: empty block set");
  for (int b : block_set) {
    if (b < 1 || b > depth) {
      throw ConfigError("decode: block index " + std::to_string(b) + " outside 1.." +
                        std::to_string(depth));
    }
  }

  Tensor summed = blocks.block_outputs[static_cast<std::size_t>(block_set[0] - 1)];
  for (std::size_t i = 1; i < block_set.size(); ++i) {
    summed = add(summed, blocks.block_outputs[static_cast<std::size_t>(block_set[i] - 1)]);
  }

  // Patch tokens only; index 0 is the class token.
  Tensor patch_tokens = slice(summed, 0, 1, summed.dim(0) - 1);
  Tensor hidden = gelu(add(matmul(patch_tokens, decoder.fc1_weight), decoder.fc1_bias));
  Tensor features = add(matmul(hidden, decoder.fc2_weight), decoder.fc2_bias);
  Tensor pixels = add(matmul(features, decoder.out_weight), decoder.out_bias);
  return patches_to_image(pixels, patch);
}

std::size_t decoder_param_count(const EncoderConfig& config, const PatchConfig& patch) {
  const std::size_t k = static_cast<std::size_t>(config.embed_dim);
  const std::size_t patch_dim = static_cast<std::size_t>(patch.patch_dim());
  return (k * k + k) * 2 + k * patch_dim + patch_dim;
}

}  // namespace sbssl
