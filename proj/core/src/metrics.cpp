#include "sbssl/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>

#include "sbssl/errors.hpp"

namespace sbssl {

namespace {

void check_inputs(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("metrics: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("metrics: labels must be 0 or 1");
  }
}

}  // namespace

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_inputs(scores, labels);
  const std::int64_t positives = std::accumulate(labels.begin(), labels.end(), std::int64_t{0});
  const std::int64_t negatives = static_cast<std::int64_t>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("roc_auc: need both classes, got " + std::to_string(positives) +
                    " positives of " + std::to_string(labels.size()));
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.points.push_back({0.0, 0.0});

  // Sweep in descending score order, emitting one point per distinct score.
  // The trapezoid integral is accumulated on the integer counts: each step
  // contributes d_fp * (2*tp_prev + d_tp), i.e. 2*concordant + tied pairs.
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t numerator = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    const std::int64_t tp_prev = tp;
    const std::int64_t fp_prev = fp;
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    numerator += (fp - fp_prev) * (tp + tp_prev);
    curve.thresholds.push_back(threshold);
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  curve.auc =
      static_cast<double>(numerator) / static_cast<double>(2 * positives * negatives);
  return curve;
}

ThresholdMetrics threshold_metrics(const std::vector<double>& scores,
                                   const std::vector<int>& labels, double threshold) {
  check_inputs(scores, labels);
  if (scores.empty()) throw DataError("threshold_metrics: empty input");
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? tp : fn) += 1;
    } else {
      (predicted ? fp : tn) += 1;
    }
  }
  ThresholdMetrics m;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  m.sensitivity = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.specificity = (tn + fp) ? static_cast<double>(tn) / static_cast<double>(tn + fp) : 0.0;
  return m;
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_roc_csv: cannot open " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    out << curve.thresholds[i] << ',' << curve.points[i].fpr << ',' << curve.points[i].tpr
        << '\n';
  }
  out << "auc," << curve.auc << '\n';
  if (!out) throw DataError("write_roc_csv: write failed for " + path.string());
}

}  // namespace sbssl
