#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sbssl/augment.hpp"
#include "sbssl/checkpoint.hpp"
#include "sbssl/corruption.hpp"
#include "sbssl/decoder.hpp"
#include "sbssl/encoder.hpp"
#include "sbssl/volume.hpp"

namespace sbssl {

// Self-supervised pretraining recipe: which intermediate blocks feed the
// decoder, the optimization schedules, and the stochastic transforms.
struct PretrainConfig {
  std::vector<int> block_set;  // empty selects default_block_set(depth)
  int epochs = 100;
  int batch_size = 8;
  double base_lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double wd_start = 0.04;
  double wd_end = 0.4;
  double warmup_fraction = 0.05;
  double lr_floor = 1e-6;
  CorruptionSpec corruption;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  // Checkpoints are written only when checkpoint_dir is set: the final state
  // always, and additionally after every checkpoint_every-th epoch when > 0.
  std::string checkpoint_dir;
  int checkpoint_every = 0;

  std::vector<int> resolved_block_set(int depth) const;
  void validate(int depth) const;  // throws ConfigError
};

// One loss-log row; epoch is 1-based, wd and lr are the values used that
// epoch.
struct LossLogRow {
  int epoch = 0;
  double mean_loss = 0.0;
  double weight_decay = 0.0;
  double lr = 0.0;
};

struct PretrainResult {
  EncoderState encoder;
  DecoderState decoder;
  std::vector<LossLogRow> log;
};

// Mean absolute error over masked pixels only: sum(mask * |x - x_hat|)
// divided by the masked-pixel count, so the scale does not depend on the
// corruption ratio. All three tensors share one shape; mask holds 0/1.
// An all-zero mask yields a constant 0 (no gradient signal). The gradient
// w.r.t. x_hat is identically zero at every unmasked pixel.
Tensor masked_l1_loss(const Tensor& x, const Tensor& x_hat, const Tensor& mask);

// Runs augmentation -> corruption -> encode -> decode -> masked l1 -> AdamW
// per batch over every slice of every volume. Fully deterministic given the
// seed: per-sample transforms derive from (seed, epoch, slice index) and the
// epoch shuffle from (seed, epoch), independent of batch boundaries. When
// resume is non-null, parameters, optimizer state, and the epoch counter
// continue from the checkpoint and the loss log covers the remaining epochs.
// Throws NumericError if a batch loss turns non-finite.
PretrainResult pretrain(const std::vector<Volume>& dataset, const EncoderConfig& encoder_config,
                        const PatchConfig& patch, const PretrainConfig& config,
                        const Checkpoint* resume = nullptr);

// CSV: "epoch,mean_loss,wd,lr" plus one row per epoch.
void write_loss_csv(const std::vector<LossLogRow>& log, const std::filesystem::path& path);

}  // namespace sbssl
