#include "sbssl/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sbssl/errors.hpp"
#include "sbssl/npy.hpp"

namespace sbssl {

std::string exam_path(const std::string& root, const std::string& split,
                      const std::string& plane, const std::string& exam_id) {
  return (std::filesystem::path(root) / split / plane / (exam_id + ".npy")).string();
}

std::string labels_path(const std::string& root, const std::string& split) {
  return (std::filesystem::path(root) / (split + "-labels.csv")).string();
}

std::vector<LabeledExam> read_label_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty label manifest: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "exam_id,label") {
    throw DataError("label manifest header must be 'exam_id,label', got '" + line + "'");
  }
  std::vector<LabeledExam> exams;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw DataError("malformed manifest row " + std::to_string(line_no) + ": '" + line + "'");
    }
    const std::string id = line.substr(0, comma);
    const std::string label_text = line.substr(comma + 1);
    if (label_text != "0" && label_text != "1") {
      throw DataError("label must be 0 or 1 at manifest row " + std::to_string(line_no) +
                      ", got '" + label_text + "'");
    }
    exams.push_back({id, label_text == "1" ? 1 : 0});
  }
  return exams;
}

void write_label_csv(const std::string& path, const std::vector<LabeledExam>& exams) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write label manifest: " + path);
  out << "exam_id,label\n";
  for (const LabeledExam& e : exams) out << e.exam_id << ',' << e.label << '\n';
  if (!out) throw DataError("write failed for label manifest: " + path);
}

std::vector<Volume> load_split(const std::string& root, const std::string& split,
                               const std::string& plane) {
  const std::vector<LabeledExam> manifest = read_label_csv(labels_path(root, split));
  std::vector<Volume> volumes;
  volumes.reserve(manifest.size());
  for (const LabeledExam& e : manifest) {
    Volume v = read_npy(exam_path(root, split, plane, e.exam_id));
    v.exam_id = e.exam_id;
    v.label = e.label;
    v.plane = plane;
    volumes.push_back(std::move(v));
  }
  return volumes;
}

}  // namespace sbssl
