#pragma once

#include <string>
#include <vector>

#include "sbssl/volume.hpp"

namespace sbssl {

// One row of a label manifest.
struct LabeledExam {
  std::string exam_id;
  int label = 0;  // 0 or 1
};

// Label manifests are CSV files with the exact header "exam_id,label" and one
// row per exam; volumes live at <root>/<split>/<plane>/<exam_id>.npy with the
// manifest beside the split directory at <root>/<split>-labels.csv.
std::string exam_path(const std::string& root, const std::string& split,
                      const std::string& plane, const std::string& exam_id);
std::string labels_path(const std::string& root, const std::string& split);

// Throws DataError on a missing file, wrong header, or a label outside {0,1}.
std::vector<LabeledExam> read_label_csv(const std::string& path);
void write_label_csv(const std::string& path, const std::vector<LabeledExam>& exams);

// Loads every exam listed in the split's manifest, in manifest order, with
// labels and plane tags attached. Throws DataError if a listed file is absent.
std::vector<Volume> load_split(const std::string& root, const std::string& split,
                               const std::string& plane);

}  // namespace sbssl
