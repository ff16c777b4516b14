#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sbssl/augment.hpp"
#include "sbssl/checkpoint.hpp"
#include "sbssl/encoder.hpp"
#include "sbssl/rng.hpp"
#include "sbssl/volume.hpp"

namespace sbssl {

// Classification head over pooled slice features: FC K->K with GeLU, then a
// linear layer to 2 logits (absent, present).
struct HeadState {
  Tensor fc_weight, fc_bias;    // [K,K],[K]
  Tensor out_weight, out_bias;  // [K,2],[2]

  static HeadState init(int embed_dim, std::uint64_t seed);

  /// head.fc.weight, head.fc.bias, head.out.weight, head.out.bias.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  void register_into(AdamW& opt) const;
};

// How the f per-slice features collapse to one vector. Mean keeps gradients
// dense over all slices and is the default; max mirrors MRNet's pooling.
enum class Pooling { mean, max };
Pooling parse_pooling(const std::string& name);  // "mean" | "max"

struct FinetuneConfig {
  int epochs = 50;
  int batch_size = 4;  // volumes per optimizer step
  double base_lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double wd_start = 0.04;
  double wd_end = 0.4;
  double warmup_fraction = 0.05;
  double lr_floor = 1e-6;
  Pooling pooling = Pooling::mean;
  // Diagnostic linear-probe mode: encoder features are computed without
  // gradients and only the head trains.
  bool freeze_encoder = false;
  AugmentConfig augment;
  std::uint64_t seed = 0;

  void validate() const;
};

// y[i] = class-token output of slice i; shape [f, K]. Pure: no augmentation,
// no gradients recorded. Throws DataError on an empty volume.
Tensor encode_volume(const Volume& volume, const EncoderState& encoder);

// Per-slice FC+GeLU, pool over slices, linear to 2 logits. y is [f,K]; the
// result is [2]. Exactly invariant to slice order for both pooling modes.
Tensor classify(const Tensor& y, const HeadState& head, Pooling pooling = Pooling::mean);

// Positive-class probability for one volume: softmax over classify logits.
double predict_probability(const Volume& volume, const EncoderState& encoder,
                           const HeadState& head, Pooling pooling = Pooling::mean);

// Every index once, plus minority indices redrawn uniformly with replacement
// until class counts match. Majority indices appear exactly once; balanced
// input comes back as the identity. Throws DataError on single-class input.
std::vector<std::size_t> oversample_indices(const std::vector<int>& labels, Rng& rng);

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_auc = 0.0;
  double val_accuracy = 0.0;
  double weight_decay = 0.0;
  double lr = 0.0;
};

struct FinetuneResult {
  EncoderState encoder;
  HeadState head;
  std::vector<EpochMetrics> log;
};

// Cross-entropy training over oversampled volumes with the pretraining
// optimizer recipe; per-epoch AUC/accuracy on the validation split. The
// encoder starts from the checkpoint when given (architecture must match the
// requested config; ConfigError otherwise) or fresh from the seed when null.
// Deterministic given the seed. val may be empty (metrics columns stay 0).
FinetuneResult finetune(const std::vector<Volume>& train, const std::vector<Volume>& val,
                        const EncoderConfig& encoder_config, const PatchConfig& patch,
                        const FinetuneConfig& config, const Checkpoint* pretrained = nullptr);

// Five-by-default independently initialized members over one shared recipe;
// member k trains with seed = config.seed + k.
struct EnsembleMember {
  EncoderState encoder;
  HeadState head;
};

struct Ensemble {
  std::vector<EnsembleMember> members;
  Pooling pooling = Pooling::mean;
};

Ensemble train_ensemble(const std::vector<Volume>& train, const std::vector<Volume>& val,
                        const EncoderConfig& encoder_config, const PatchConfig& patch,
                        const FinetuneConfig& config, const Checkpoint* pretrained = nullptr,
                        int members = 5);

// Mean of member positive-class probabilities; DataError on an empty
// ensemble. Bounded in [0,1] and invariant to member order.
double ensemble_predict(const Ensemble& ensemble, const Volume& volume);

// CSV "epoch,train_loss,val_auc,val_accuracy,wd,lr".
void write_metrics_csv(const std::vector<EpochMetrics>& log, const std::filesystem::path& path);

// CSV "exam_id,probability,label", one row per volume in order.
void write_predictions_csv(const std::vector<Volume>& volumes,
                           const std::vector<double>& probabilities,
                           const std::filesystem::path& path);

}  // namespace sbssl
