#include "sbssl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "sbssl/dataset.hpp"
#include "sbssl/errors.hpp"
#include "sbssl/npy.hpp"
#include "sbssl/rng.hpp"

namespace sbssl {

void SynthSpec::validate() const {
  if (exams < 2) throw ConfigError("synthetic: need at least 2 exams");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) {
    throw ConfigError("synthetic: positive_rate must lie in (0,1)");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("synthetic: val_fraction must lie in [0,1)");
  }
  if (f_min < 1 || f_max < f_min) throw ConfigError("synthetic: bad slice-count range");
  if (image_size < 8) throw ConfigError("synthetic: image_size must be at least 8");
  if (band_width < 1 || band_width > image_size) {
    throw ConfigError("synthetic: band_width must lie in [1, image_size]");
  }
  if (band_contrast < 0.0 || noise_level < 0.0 || distractor_blobs < 0) {
    throw ConfigError("synthetic: contrast, noise, and blob count must be non-negative");
  }
}

bool in_band(int row, int col, int band_width) {
  return std::abs(col - row) <= band_width / 2;
}

std::pair<int, int> mid_slice_range(int slice_count) {
  // Middle third rounded outward; non-empty for any slice_count >= 1.
  return {slice_count / 3, slice_count - slice_count / 3};
}

double band_mean_score(const Volume& volume, const SynthSpec& spec) {
  const auto [first, last] = mid_slice_range(volume.slice_count());
  const int h = volume.height();
  const int w = volume.width();
  const std::vector<double>& data = volume.slices.data();
  double total = 0.0;
  std::size_t count = 0;
  for (int s = first; s < last; ++s) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!in_band(y, x, spec.band_width)) continue;
        total += data[(static_cast<std::size_t>(s) * h + y) * w + x];
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

namespace {

// Sub-stream tags under rng_stream::synth: 0 = label assignment,
// 1 = validation split, 2 + exam index = that exam's content.
constexpr std::uint64_t kLabelStream = 0;
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kExamStreamBase = 2;

std::string format_exam_id(int index) {
  std::string id = std::to_string(index);
  if (id.size() < 4) id.insert(0, 4 - id.size(), '0');
  return id;
}

Volume make_exam(const SynthSpec& spec, int index, int label) {
  Rng rng = Rng::derive(spec.seed, {rng_stream::synth, kExamStreamBase + index});
  const int f = static_cast<int>(rng.uniform_int(spec.f_min, spec.f_max));
  const int n = spec.image_size;
  std::vector<double> pixels(static_cast<std::size_t>(f) * n * n);

  for (double& v : pixels) v = spec.noise_level * rng.uniform();

  const int blob_side = 3;
  for (int s = 0; s < f; ++s) {
    double* slice = pixels.data() + static_cast<std::size_t>(s) * n * n;
    for (int b = 0; b < spec.distractor_blobs; ++b) {
      const int row = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - blob_side + 1)));
      const int col = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - blob_side + 1)));
      for (int dy = 0; dy < blob_side; ++dy) {
        for (int dx = 0; dx < blob_side; ++dx) {
          slice[(row + dy) * n + (col + dx)] += spec.band_contrast;
        }
      }
    }
  }

  if (label == 1) {
    const auto [first, last] = mid_slice_range(f);
    for (int s = first; s < last; ++s) {
      double* slice = pixels.data() + static_cast<std::size_t>(s) * n * n;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          if (in_band(y, x, spec.band_width)) slice[y * n + x] += spec.band_contrast;
        }
      }
    }
  }

  // Clamp, then round-trip through float32 so on-disk <f4 files reproduce the
  // in-memory values exactly.
  for (double& v : pixels) {
    v = static_cast<double>(static_cast<float>(std::clamp(v, 0.0, 1.0)));
  }

  Volume volume;
  volume.exam_id = format_exam_id(index);
  volume.slices = Tensor::from_data({f, n, n}, pixels);
  volume.label = label;
  volume.plane = spec.plane;
  return volume;
}

}  // namespace

SyntheticDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();

  // Positive count is deterministic; clamping keeps both classes non-empty
  // for extreme rate/exam combinations.
  const int n_pos = std::clamp(
      static_cast<int>(std::lround(spec.exams * spec.positive_rate)), 1, spec.exams - 1);
  std::vector<int> labels(static_cast<std::size_t>(spec.exams), 0);
  std::fill(labels.begin(), labels.begin() + n_pos, 1);
  Rng label_rng = Rng::derive(spec.seed, {rng_stream::synth, kLabelStream});
  label_rng.shuffle(labels);

  std::vector<int> pos_indices;
  std::vector<int> neg_indices;
  for (int i = 0; i < spec.exams; ++i) (labels[i] ? pos_indices : neg_indices).push_back(i);

  // Stratified validation split; with a non-zero fraction, each class keeps at
  // least one exam on each side so both splits stay two-class.
  Rng split_rng = Rng::derive(spec.seed, {rng_stream::synth, kSplitStream});
  std::vector<bool> in_val(static_cast<std::size_t>(spec.exams), false);
  for (std::vector<int>* cls : {&pos_indices, &neg_indices}) {
    split_rng.shuffle(*cls);
    int take = static_cast<int>(std::lround(cls->size() * spec.val_fraction));
    if (spec.val_fraction > 0.0) {
      take = std::clamp(take, 1, static_cast<int>(cls->size()) - 1);
    }
    for (int k = 0; k < take; ++k) in_val[static_cast<std::size_t>((*cls)[k])] = true;
  }

  SyntheticDataset dataset;
  for (int i = 0; i < spec.exams; ++i) {
    Volume v = make_exam(spec, i, labels[i]);
    (in_val[i] ? dataset.val : dataset.train).push_back(std::move(v));
  }
  return dataset;
}

SyntheticDataset write_synthetic(const SynthSpec& spec, const std::string& root) {
  SyntheticDataset dataset = generate_synthetic(spec);
  const auto write_split = [&](const std::vector<Volume>& volumes, const std::string& split) {
    std::vector<LabeledExam> manifest;
    manifest.reserve(volumes.size());
    for (const Volume& v : volumes) {
      write_npy(v.slices, exam_path(root, split, spec.plane, v.exam_id));
      manifest.push_back({v.exam_id, v.label});
    }
    write_label_csv(labels_path(root, split), manifest);
  };
  write_split(dataset.train, "train");
  write_split(dataset.val, "valid");
  return dataset;
}

}  // namespace sbssl
