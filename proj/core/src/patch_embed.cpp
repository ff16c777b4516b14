#include "sbssl/patch_embed.hpp"

#include <string>

#include "sbssl/errors.hpp"

namespace sbssl {

void PatchConfig::validate() const {
  if (image_size <= 0 || patch_size <= 0 || embed_dim <= 0 || channels <= 0) {
    throw ConfigError("patch config: all dimensions must be positive");
  }
  if (image_size % patch_size != 0) {
    throw ConfigError("patch config: image size " + std::to_string(image_size) +
                      " not divisible by patch size " + std::to_string(patch_size));
  }
}

PatchProjection PatchProjection::init(const PatchConfig& config, Rng& rng) {
  config.validate();
  PatchProjection proj;
  proj.weight = Tensor::randn({config.patch_dim(), config.embed_dim}, rng, 0.02, true);
  proj.bias = Tensor::zeros({config.embed_dim}, true);
  return proj;
}

Tensor image_to_patches(const Tensor& image, const PatchConfig& config) {
  config.validate();
  const int c = config.channels;
  const int g = config.grid();
  const int p = config.patch_size;
  if (image.shape() != std::vector<int>{c, config.image_size, config.image_size}) {
    throw ShapeError("image_to_patches: got " + shape_str(image.shape()) + ", config expects [" +
                     std::to_string(c) + "," + std::to_string(config.image_size) + "," +
                     std::to_string(config.image_size) + "]");
  }
  Tensor split = reshape(image, {c, g, p, g, p});
  Tensor grouped = permute(split, {1, 3, 0, 2, 4});  // [g,g,C,p,p]
  return reshape(grouped, {config.tokens(), config.patch_dim()});
}

Tensor patches_to_image(const Tensor& patches, const PatchConfig& config) {
  config.validate();
  const int c = config.channels;
  const int g = config.grid();
  const int p = config.patch_size;
  if (patches.shape() != std::vector<int>{config.tokens(), config.patch_dim()}) {
    throw ShapeError("patches_to_image: got " + shape_str(patches.shape()) +
                     ", config expects [" + std::to_string(config.tokens()) + "," +
                     std::to_string(config.patch_dim()) + "]");
  }
  Tensor grouped = reshape(patches, {g, g, c, p, p});
  Tensor split = permute(grouped, {2, 0, 3, 1, 4});  // [C,g,p,g,p]
  return reshape(split, {c, config.image_size, config.image_size});
}

Tensor patchify(const Tensor& image, const PatchProjection& proj, const PatchConfig& config) {
  Tensor patches = image_to_patches(image, config);
  return add(matmul(patches, proj.weight), proj.bias);
}

Tensor assemble_sequence(const Tensor& patches, const Tensor& class_token,
                         const Tensor& pos_embed) {
  if (patches.rank() != 2 || class_token.rank() != 2 || class_token.dim(0) != 1 ||
      class_token.dim(1) != patches.dim(1)) {
    throw ShapeError("assemble_sequence: patches " + shape_str(patches.shape()) +
                     " with class token " + shape_str(class_token.shape()));
  }
  Tensor tokens = concat(class_token, patches, 0);
  if (pos_embed.shape() != tokens.shape()) {
    throw ShapeError("assemble_sequence: positions " + shape_str(pos_embed.shape()) +
                     " for tokens " + shape_str(tokens.shape()));
  }
  return add(tokens, pos_embed);
}

}  // namespace sbssl
