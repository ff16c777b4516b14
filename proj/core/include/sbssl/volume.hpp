#pragma once

#include <string>

#include "sbssl/tensor.hpp"

namespace sbssl {

/// One exam: a stack of f same-sized slices with intensities in [0,1] after
/// loading, a binary label, and the acquisition plane tag.
struct Volume {
  std::string exam_id;
  Tensor slices;  // [f,H,W]
  int label = 0;
  std::string plane = "sagittal";

  int slice_count() const { return slices.defined() ? slices.dim(0) : 0; }
  int height() const { return slices.dim(1); }
  int width() const { return slices.dim(2); }

  /// Slice i as a [1,H,W] tensor (single-channel model input).
  Tensor slice(int i) const {
    return reshape(sbssl::slice(slices, 0, i, 1), {1, height(), width()});
  }
};

}  // namespace sbssl
