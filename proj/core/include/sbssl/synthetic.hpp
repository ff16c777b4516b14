#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sbssl/volume.hpp"

namespace sbssl {

// Planted-feature volume generator: a desk-scale stand-in for a real MRI
// classification set. Every exam is low-amplitude uniform noise plus a few
// bright square distractor blobs; positive exams additionally carry a bright
// main-diagonal band in their middle-third slices. The band region is analytic
// (see in_band / band_mean_score), so label recoverability can be checked
// against a closed-form discriminant rather than a trained model.
struct SynthSpec {
  int exams = 200;
  double val_fraction = 0.2;    // stratified; both classes kept on both sides
  int f_min = 6;                // slices per exam, drawn uniformly per exam
  int f_max = 10;
  int image_size = 32;          // H = W
  double positive_rate = 0.25;  // in (0,1); positive count = round(exams * rate)
  int band_width = 4;           // band = |col - row| <= band_width / 2
  double band_contrast = 0.30;  // added intensity inside the band
  double noise_level = 0.15;    // background pixels ~ U[0, noise_level)
  int distractor_blobs = 2;     // 3x3 blobs of +band_contrast per slice, both classes
  std::string plane = "sagittal";
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct SyntheticDataset {
  std::vector<Volume> train;
  std::vector<Volume> val;
};

// Whether (row, col) lies in the planted band for a given width.
bool in_band(int row, int col, int band_width);

// Middle-third slice range [first, last) of an f-slice volume; never empty.
std::pair<int, int> mid_slice_range(int slice_count);

// The analytic discriminant: mean intensity over band pixels of the middle
// third of slices. Positives sit ~band_contrast above negatives.
double band_mean_score(const Volume& volume, const SynthSpec& spec);

// Deterministic in-memory generation. Exam ids are "0000", "0001", ... in
// generation order; intensities are exactly representable as float32 so a
// write/read round trip reproduces them bit for bit.
SyntheticDataset generate_synthetic(const SynthSpec& spec);

// Generates and writes <root>/{train,valid}/<plane>/<id>.npy plus the two
// label manifests. Returns the in-memory dataset for immediate use.
SyntheticDataset write_synthetic(const SynthSpec& spec, const std::string& root);

}  // namespace sbssl
