#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sbssl/optim.hpp"
#include "sbssl/patch_embed.hpp"
#include "sbssl/tensor.hpp"

namespace sbssl {

/// Transformer hyperparameters. Presets follow the usual ViT families plus
/// two desk-scale sizes for tests.
struct EncoderConfig {
  int depth = 12;
  int embed_dim = 192;
  int heads = 3;
  int mlp_ratio = 4;

  int head_dim() const { return embed_dim / heads; }
  /// embed_dim must divide evenly across heads.
  void validate() const;

  static EncoderConfig vit_t() { return {12, 192, 3, 4}; }
  static EncoderConfig vit_s() { return {12, 384, 6, 4}; }
  static EncoderConfig vit_b() { return {12, 768, 12, 4}; }
  static EncoderConfig vit_nano() { return {4, 64, 2, 4}; }
  static EncoderConfig vit_micro() { return {8, 128, 4, 4}; }
  /// Accepts "vit-t", "vit-s", "vit-b", "vit-nano", "vit-micro".
  static EncoderConfig preset(std::string_view name);
};

/// Learnable state of one pre-norm block: LN -> MSA -> residual, then
/// LN -> MLP -> residual.
struct BlockParams {
  Tensor ln1_gain, ln1_bias;
  Tensor qkv_weight, qkv_bias;    // [K,3K],[3K]
  Tensor proj_weight, proj_bias;  // [K,K],[K]
  Tensor ln2_gain, ln2_bias;
  Tensor fc1_weight, fc1_bias;  // [K,rK],[rK]
  Tensor fc2_weight, fc2_bias;  // [rK,K],[K]
};

/// Full backbone state: patch projection, class token, position table, and
/// the block stack. Parameter names and their order are canonical; the
/// checkpoint format and optimizer registration both rely on them.
struct EncoderState {
  EncoderConfig config;
  PatchConfig patch;
  PatchProjection patch_proj;
  Tensor class_token;  // [1,K]
  Tensor pos_embed;    // [(n+1),K]
  std::vector<BlockParams> blocks;

  static EncoderState init(const EncoderConfig& config, const PatchConfig& patch,
                           std::uint64_t seed);

  /// Canonical (name, tensor) pairs: patch.weight, patch.bias, cls_token,
  /// pos_embed, then block{i}.{ln1,attn.qkv,attn.proj,ln2,mlp.fc1,mlp.fc2}.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;

  /// Registers every parameter; weight decay applies only to names ending in
  /// ".weight" (rank-2 projection matrices).
  void register_into(AdamW& opt) const;
};

/// Everything a forward pass exposes: the input sequence, each block's output
/// sequence E_i, and (optionally) each block's attention tensor [h,T,T].
/// Attention tensors are detached values, recorded only on request.
struct BlockOutputs {
  Tensor input;
  std::vector<Tensor> block_outputs;
  std::vector<Tensor> attentions;

  const Tensor& final_output() const { return block_outputs.empty() ? input : block_outputs.back(); }
};

/// Softmax(Q Kᵀ / sqrt(d)) V on a single head; q, k, v are [T,d].
Tensor self_attention(const Tensor& q, const Tensor& k, const Tensor& v);

/// x + Proj(Concat over heads of self-attention). x is [T,K]. When given,
/// *attention receives the detached [h,T,T] weights.
Tensor msa_block(const Tensor& x, const BlockParams& params, const EncoderConfig& config,
                 Tensor* attention = nullptr);

/// x + W2 GeLU(W1 LN(x)).
Tensor mlp_block(const Tensor& x, const BlockParams& params, const EncoderConfig& config);

/// One full block: MSA sublayer then MLP sublayer.
Tensor run_block(const Tensor& x, const BlockParams& params, const EncoderConfig& config,
                 Tensor* attention = nullptr);

/// Applies all blocks in order, retaining every E_i (and A_i on request).
BlockOutputs encode(const Tensor& tokens, const EncoderState& state,
                    bool record_attention = false);

/// patchify + assemble_sequence + encode on a [C,H,W] image.
BlockOutputs encode_image(const Tensor& image, const EncoderState& state,
                          bool record_attention = false);

/// Learnable scalar count for the encoder stack including the patch
/// projection, class token, and position table; decoder and task heads are
/// counted separately by their own modules.
std::size_t encoder_param_count(const EncoderConfig& config, const PatchConfig& patch);

}  // namespace sbssl
