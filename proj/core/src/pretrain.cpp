#include "sbssl/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sbssl/errors.hpp"
#include "sbssl/rng.hpp"

namespace sbssl {

std::vector<int> PretrainConfig::resolved_block_set(int depth) const {
  return block_set.empty() ? default_block_set(depth) : block_set;
}

void PretrainConfig::validate(int depth) const {
  const std::vector<int> blocks = resolved_block_set(depth);
  if (blocks.empty()) throw ConfigError("pretrain: block set is empty");
  for (int b : blocks) {
    if (b < 1 || b > depth) {
      throw ConfigError("pretrain: block index " + std::to_string(b) + " outside [1, " +
                        std::to_string(depth) + "]");
    }
  }
  if (epochs < 1) throw ConfigError("pretrain: epochs must be positive");
  if (batch_size < 1) throw ConfigError("pretrain: batch_size must be positive");
  if (!(base_lr > 0.0)) throw ConfigError("pretrain: base_lr must be positive");
  if (checkpoint_every < 0) throw ConfigError("pretrain: checkpoint_every must be >= 0");
  corruption.validate();
  augment.validate();
}

Tensor masked_l1_loss(const Tensor& x, const Tensor& x_hat, const Tensor& mask) {
  if (x.shape() != x_hat.shape() || x.shape() != mask.shape()) {
    throw ShapeError("masked_l1_loss: shapes " + shape_str(x.shape()) + ", " +
                     shape_str(x_hat.shape()) + ", " + shape_str(mask.shape()) +
                     " must all match");
  }
  double count = 0.0;
  for (double v : mask.data()) count += (v != 0.0) ? 1.0 : 0.0;
  if (count == 0.0) return Tensor::scalar(0.0);
  return scale(sum_all(mul(absolute(sub(x, x_hat)), mask)), 1.0 / count);
}

namespace {

// Stable slice addressing: the flattened (volume, slice) list in dataset
// order. Per-sample rng streams key on the flat index, so a sample's
// transforms depend only on (seed, epoch, flat index), never on the shuffle.
struct SliceRef {
  int volume = 0;
  int slice = 0;
};

std::vector<SliceRef> flatten(const std::vector<Volume>& dataset) {
  std::vector<SliceRef> refs;
  for (std::size_t v = 0; v < dataset.size(); ++v) {
    for (int s = 0; s < dataset[v].slice_count(); ++s) {
      refs.push_back({static_cast<int>(v), s});
    }
  }
  return refs;
}

}  // namespace

PretrainResult pretrain(const std::vector<Volume>& dataset, const EncoderConfig& encoder_config,
                        const PatchConfig& patch, const PretrainConfig& config,
                        const Checkpoint* resume) {
  encoder_config.validate();
  patch.validate();
  config.validate(encoder_config.depth);
  if (dataset.empty()) throw DataError("pretrain: empty dataset");
  for (const Volume& v : dataset) {
    if (v.height() != patch.image_size || v.width() != patch.image_size) {
      throw DataError("pretrain: volume " + v.exam_id + " is " + std::to_string(v.height()) +
                      "x" + std::to_string(v.width()) + ", model expects " +
                      std::to_string(patch.image_size));
    }
  }
  const std::vector<int> blocks = config.resolved_block_set(encoder_config.depth);

  PretrainResult result;
  result.encoder = EncoderState::init(encoder_config, patch, config.seed);
  result.decoder = DecoderState::init(encoder_config, patch, config.seed);

  AdamW opt(config.beta1, config.beta2);
  result.encoder.register_into(opt);
  result.decoder.register_into(opt);

  auto named_params = [&] {
    auto params = result.encoder.named_parameters();
    const auto dec = result.decoder.named_parameters();
    params.insert(params.end(), dec.begin(), dec.end());
    return params;
  };

  int start_epoch = 0;
  if (resume != nullptr) {
    if (resume->kind != "pretrain") {
      throw DataError("pretrain: cannot resume from a '" + resume->kind + "' checkpoint");
    }
    restore_parameters(*resume, named_params());
    restore_optimizer(*resume, opt);
    start_epoch = resume->epoch;
    if (start_epoch >= config.epochs) {
      throw ConfigError("pretrain: checkpoint already covers " + std::to_string(start_epoch) +
                        " of " + std::to_string(config.epochs) + " epochs");
    }
  }

  const std::vector<SliceRef> slices = flatten(dataset);
  const int grid = patch.grid();

  const auto save = [&](int completed_epochs, const std::filesystem::path& path) {
    save_checkpoint(make_checkpoint("pretrain", completed_epochs, config.seed, encoder_config,
                                    patch, named_params(), &opt),
                    path);
  };

  for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
    const double wd = cosine_weight_decay(epoch, config.epochs, config.wd_start, config.wd_end);
    const double lr = lr_at_epoch(epoch, config.epochs, config.base_lr, config.warmup_fraction,
                                  config.lr_floor);

    std::vector<std::size_t> order(slices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng =
        Rng::derive(config.seed, {rng_stream::shuffle, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t cursor = 0;
    int batch_index = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end =
          std::min(cursor + static_cast<std::size_t>(config.batch_size), order.size());
      Tensor batch_loss;
      const int batch_n = static_cast<int>(batch_end - cursor);
      for (; cursor < batch_end; ++cursor) {
        const std::size_t flat = order[cursor];
        const SliceRef ref = slices[flat];
        Rng sample_rng = Rng::derive(
            config.seed, {rng_stream::sample, static_cast<std::uint64_t>(epoch), flat});

        const Volume& volume = dataset[static_cast<std::size_t>(ref.volume)];
        const std::vector<double>& all = volume.slices.data();
        const std::size_t plane_size =
            static_cast<std::size_t>(volume.height()) * volume.width();
        std::vector<double> pixels(all.begin() + static_cast<std::ptrdiff_t>(ref.slice * plane_size),
                                   all.begin() +
                                       static_cast<std::ptrdiff_t>((ref.slice + 1) * plane_size));

        pixels = augment(pixels, volume.height(), volume.width(), config.augment, sample_rng);
        const Tensor target =
            Tensor::from_data({patch.channels, volume.height(), volume.width()}, pixels);

        const CorruptionMask mask =
            sample_mask(grid, grid, patch.patch_size, config.corruption, sample_rng);
        const Tensor corrupted = apply_corruption(target, mask, config.corruption, sample_rng);

        const BlockOutputs outputs = encode_image(corrupted, result.encoder);
        const Tensor reconstruction = decode(outputs, blocks, result.decoder, patch);
        const Tensor loss =
            masked_l1_loss(target, reconstruction, mask_tensor(mask, patch.channels));
        batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
      }
      batch_loss = scale(batch_loss, 1.0 / batch_n);
      const double loss_value = batch_loss.value();
      if (!std::isfinite(loss_value)) {
        throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           ", batch " + std::to_string(batch_index + 1));
      }
      epoch_loss += loss_value * batch_n;

      backward(batch_loss);
      opt.step(lr, wd);
      opt.zero_grad();
      ++batch_index;
    }

    result.log.push_back(
        {epoch + 1, epoch_loss / static_cast<double>(order.size()), wd, lr});

    if (!config.checkpoint_dir.empty() && config.checkpoint_every > 0 &&
        (epoch + 1) % config.checkpoint_every == 0 && epoch + 1 < config.epochs) {
      save(epoch + 1, std::filesystem::path(config.checkpoint_dir) /
                          ("pretrain_epoch" + std::to_string(epoch + 1) + ".ckpt"));
    }
  }

  if (!config.checkpoint_dir.empty()) {
    save(config.epochs, std::filesystem::path(config.checkpoint_dir) / "pretrain.ckpt");
  }
  return result;
}

void write_loss_csv(const std::vector<LossLogRow>& log, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_loss_csv: cannot open " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "epoch,mean_loss,wd,lr\n";
  for (const LossLogRow& row : log) {
    out << row.epoch << ',' << row.mean_loss << ',' << row.weight_decay << ',' << row.lr << '\n';
  }
  if (!out) throw DataError("write_loss_csv: write failed for " + path.string());
}

}  // namespace sbssl
