#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sbssl/encoder.hpp"
#include "sbssl/optim.hpp"
#include "sbssl/patch_embed.hpp"
#include "sbssl/tensor.hpp"

namespace sbssl {

// On-disk training snapshot. One file: an 8-byte magic, a version word, a
// JSON metadata block (kind, epoch, seed, architecture, parameter manifest,
// optimizer presence), then raw little-endian float64 buffers in manifest
// order -- all parameter values first, then per-parameter Adam m and v when
// optimizer state is included. Buffers are keyed by canonical parameter
// names, so restoration is by name, never by position alone.
struct CheckpointEntry {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
};

struct CheckpointAdamEntry {
  std::vector<double> m;
  std::vector<double> v;
};

struct Checkpoint {
  std::string kind;  // "pretrain" or "finetune"
  int epoch = 0;     // completed epochs
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  PatchConfig patch;
  std::vector<CheckpointEntry> params;
  bool has_adam = false;
  long adam_steps = 0;
  std::vector<CheckpointAdamEntry> adam;  // parallel to params when has_adam

  const CheckpointEntry* find(const std::string& name) const;
};

// Snapshots the given tensors (copies values); opt, when non-null, supplies
// Adam slots for every named parameter.
Checkpoint make_checkpoint(const std::string& kind, int epoch, std::uint64_t seed,
                           const EncoderConfig& encoder, const PatchConfig& patch,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           AdamW* opt = nullptr);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws DataError (with a defect description) on anything malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint buffers into the target tensors. The name sets and the
// per-name shapes must match exactly; throws DataError otherwise.
void restore_parameters(const Checkpoint& ckpt,
                        const std::vector<std::pair<std::string, Tensor>>& targets);

// Restores Adam moments and step counts; requires has_adam and a registered
// parameter set matching the manifest.
void restore_optimizer(const Checkpoint& ckpt, AdamW& opt);

}  // namespace sbssl
