#include "sbssl/encoder.hpp"

#include <cmath>
#include <string>

#include "sbssl/errors.hpp"

namespace sbssl {

void EncoderConfig::validate() const {
  if (depth < 0 || embed_dim <= 0 || heads <= 0 || mlp_ratio <= 0) {
    throw ConfigError("encoder config: non-positive dimension");
  }
  if (embed_dim % heads != 0) {
    throw ConfigError("encoder config: embed dim " + std::to_string(embed_dim) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
}

EncoderConfig EncoderConfig::preset(std::string_view name) {
  if (name == "vit-t") return vit_t();
  if (name == "vit-s") return vit_s();
  if (name == "vit-b") return vit_b();
  if (name == "vit-nano") return vit_nano();
  if (name == "vit-micro") return vit_micro();
  throw ConfigError("unknown encoder preset: " + std::string(name));
}

EncoderState EncoderState::init(const EncoderConfig& config, const PatchConfig& patch,
                                std::uint64_t seed) {
  config.validate();
  patch.validate();
  if (patch.embed_dim != config.embed_dim) {
    throw ConfigError("encoder init: patch embed dim " + std::to_string(patch.embed_dim) +
                      " vs encoder embed dim " + std::to_string(config.embed_dim));
  }

  Rng rng = Rng::derive(seed, {rng_stream::encoder_init});
  const int k = config.embed_dim;
  const int hidden = config.mlp_ratio * k;

  EncoderState state;
  state.config = config;
  state.patch = patch;
  state.patch_proj = PatchProjection::init(patch, rng);
  state.class_token = Tensor::randn({1, k}, rng, 0.02, true);
  state.pos_embed = Tensor::randn({patch.tokens() + 1, k}, rng, 0.02, true);
  state.blocks.reserve(static_cast<std::size_t>(config.depth));
  for (int i = 0; i < config.depth; ++i) {
    BlockParams b;
    b.ln1_gain = Tensor::full({k}, 1.0, true);
    b.ln1_bias = Tensor::zeros({k}, true);
    b.qkv_weight = Tensor::randn({k, 3 * k}, rng, 0.02, true);
    b.qkv_bias = Tensor::zeros({3 * k}, true);
    b.proj_weight = Tensor::randn({k, k}, rng, 0.02, true);
    b.proj_bias = Tensor::zeros({k}, true);
    b.ln2_gain = Tensor::full({k}, 1.0, true);
    b.ln2_bias = Tensor::zeros({k}, true);
    b.fc1_weight = Tensor::randn({k, hidden}, rng, 0.02, true);
    b.fc1_bias = Tensor::zeros({hidden}, true);
    b.fc2_weight = Tensor::randn({hidden, k}, rng, 0.02, true);
    b.fc2_bias = Tensor::zeros({k}, true);
    state.blocks.push_back(std::move(b));
  }
  return state;
}

std::vector<std::pair<std::string, Tensor>> EncoderState::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> named;
  named.emplace_back("patch.weight", patch_proj.weight);
  named.emplace_back("patch.bias", patch_proj.bias);
  named.emplace_back("cls_token", class_token);
  named.emplace_back("pos_embed", pos_embed);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "block" + std::to_string(i) + ".";
    const BlockParams& b = blocks[i];
    named.emplace_back(prefix + "ln1.gain", b.ln1_gain);
    named.emplace_back(prefix + "ln1.bias", b.ln1_bias);
    named.emplace_back(prefix + "attn.qkv.weight", b.qkv_weight);
    named.emplace_back(prefix + "attn.qkv.bias", b.qkv_bias);
    named.emplace_back(prefix + "attn.proj.weight", b.proj_weight);
    named.emplace_back(prefix + "attn.proj.bias", b.proj_bias);
    named.emplace_back(prefix + "ln2.gain", b.ln2_gain);
    named.emplace_back(prefix + "ln2.bias", b.ln2_bias);
    named.emplace_back(prefix + "mlp.fc1.weight", b.fc1_weight);
    named.emplace_back(prefix + "mlp.fc1.bias", b.fc1_bias);
    named.emplace_back(prefix + "mlp.fc2.weight", b.fc2_weight);
    named.emplace_back(prefix + "mlp.fc2.bias", b.fc2_bias);
  }
  return named;
}

namespace {

bool name_decays(const std::string& name) {
  const std::string suffix = ".weight";
  return name.size() > suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void EncoderState::register_into(AdamW& opt) const {
  for (const auto& [name, tensor] : named_parameters()) {
    opt.add_parameter(name, tensor, name_decays(name));
  }
}

Tensor self_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  if (q.rank() != 2 || q.shape() != k.shape() || q.shape() != v.shape()) {
    throw ShapeError("self_attention: q " + shape_str(q.shape()) + ", k " + shape_str(k.shape()) +
                     ", v " + shape_str(v.shape()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  Tensor scores = scale(matmul(q, transpose_last2(k)), inv_sqrt_d);
  return matmul(softmax_lastdim(scores), v);
}

Tensor msa_block(const Tensor& x, const BlockParams& params, const EncoderConfig& config,
                 Tensor* attention) {
  const int t = x.dim(0);
  const int k = config.embed_dim;
  const int h = config.heads;
  const int d = config.head_dim();
  if (x.rank() != 2 || x.dim(1) != k) {
    throw ShapeError("msa_block: tokens " + shape_str(x.shape()) + " for embed dim " +
                     std::to_string(k));
  }

  Tensor normed = layernorm(x, params.ln1_gain, params.ln1_bias);
  Tensor qkv = add(matmul(normed, params.qkv_weight), params.qkv_bias);  // [T,3K]
  Tensor lanes = permute(reshape(qkv, {t, 3, h, d}), {1, 2, 0, 3});      // [3,h,T,d]
  Tensor q = reshape(slice(lanes, 0, 0, 1), {h, t, d});
  Tensor key = reshape(slice(lanes, 0, 1, 1), {h, t, d});
  Tensor v = reshape(slice(lanes, 0, 2, 1), {h, t, d});

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor scores = scale(matmul(q, transpose_last2(key)), inv_sqrt_d);  // [h,T,T]
  Tensor weights = softmax_lastdim(scores);
  if (attention != nullptr) {
    *attention = Tensor::from_data(weights.shape(), weights.data());
  }
  Tensor heads_out = matmul(weights, v);                            // [h,T,d]
  Tensor merged = reshape(permute(heads_out, {1, 0, 2}), {t, k});   // [T,K]
  Tensor projected = add(matmul(merged, params.proj_weight), params.proj_bias);
  return add(projected, x);
}

Tensor mlp_block(const Tensor& x, const BlockParams& params, const EncoderConfig& config) {
  if (x.rank() != 2 || x.dim(1) != config.embed_dim) {
    throw ShapeError("mlp_block: tokens " + shape_str(x.shape()) + " for embed dim " +
                     std::to_string(config.embed_dim));
  }
  Tensor normed = layernorm(x, params.ln2_gain, params.ln2_bias);
  Tensor hidden = gelu(add(matmul(normed, params.fc1_weight), params.fc1_bias));
  Tensor out = add(matmul(hidden, params.fc2_weight), params.fc2_bias);
  return add(out, x);
}

Tensor run_block(const Tensor& x, const BlockParams& params, const EncoderConfig& config,
                 Tensor* attention) {
  return mlp_block(msa_block(x, params, config, attention), params, config);
}

BlockOutputs encode(const Tensor& tokens, const EncoderState& state, bool record_attention) {
  BlockOutputs out;
  out.input = tokens;
  out.block_outputs.reserve(state.blocks.size());
  if (record_attention) out.attentions.reserve(state.blocks.size());

  Tensor x = tokens;
  for (const BlockParams& block : state.blocks) {
    Tensor attention;
    x = run_block(x, block, state.config, record_attention ? &attention : nullptr);
    out.block_outputs.push_back(x);
    if (record_attention) out.attentions.push_back(attention);
  }
  return out;
}

BlockOutputs encode_image(const Tensor& image, const EncoderState& state, bool record_attention) {
  Tensor patches = patchify(image, state.patch_proj, state.patch);
  Tensor tokens = assemble_sequence(patches, state.class_token, state.pos_embed);
  return encode(tokens, state, record_attention);
}

std::size_t encoder_param_count(const EncoderConfig& config, const PatchConfig& patch) {
  config.validate();
  patch.validate();
  const std::size_t k = static_cast<std::size_t>(config.embed_dim);
  const std::size_t hidden = static_cast<std::size_t>(config.mlp_ratio) * k;
  const std::size_t patch_dim = static_cast<std::size_t>(patch.patch_dim());
  const std::size_t tokens = static_cast<std::size_t>(patch.tokens());

  std::size_t count = patch_dim * k + k;  // patch projection
  count += k;                             // class token
  count += (tokens + 1) * k;              // position table
  const std::size_t per_block = 2 * k                // ln1
                                + k * 3 * k + 3 * k  // qkv
                                + k * k + k          // attention projection
                                + 2 * k              // ln2
                                + k * hidden + hidden  // fc1
                                + hidden * k + k;      // fc2
  count += static_cast<std::size_t>(config.depth) * per_block;
  return count;
}

}  // namespace sbssl
