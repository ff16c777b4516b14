#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sbssl/encoder.hpp"
#include "sbssl/optim.hpp"
#include "sbssl/patch_embed.hpp"
#include "sbssl/tensor.hpp"

namespace sbssl {

/// The light reconstruction head: two point-wise (per-token) projection
/// layers with a GeLU between them, then a transposed convolution of kernel
/// p and stride p realized as a per-token linear map to C*p*p pixels
/// followed by grid reassembly.
struct DecoderState {
  Tensor fc1_weight, fc1_bias;  // [K,K],[K]
  Tensor fc2_weight, fc2_bias;  // [K,K],[K]
  Tensor out_weight, out_bias;  // [K,C*p*p],[C*p*p]

  static DecoderState init(const EncoderConfig& config, const PatchConfig& patch,
                           std::uint64_t seed);

  /// decoder.fc1.*, decoder.fc2.*, decoder.out.* in order.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  void register_into(AdamW& opt) const;
};

/// Rounded {L/2, 2L/3, 5L/6, L}, deduplicated and sorted; 1-indexed.
std::vector<int> default_block_set(int depth);

/// x_bar = Decoder(sum of E_i over i in B). Block indices are 1-based; the
/// class token is dropped before decoding since pixels come only from patch
/// tokens. Returns a [C,H,W] reconstruction.
Tensor decode(const BlockOutputs& blocks, const std::vector<int>& block_set,
              const DecoderState& decoder, const PatchConfig& patch);

std::size_t decoder_param_count(const EncoderConfig& config, const PatchConfig& patch);

}  // namespace sbssl
