#pragma once

#include <filesystem>
#include <vector>

namespace sbssl {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Receiver operating characteristic. points[0] is always (0,0) with an
// infinite threshold; the last point is always (1,1); both coordinates are
// non-decreasing along the sweep. thresholds[i] is the score cutoff whose
// ">= threshold" classifier produces points[i].
struct RocCurve {
  std::vector<double> thresholds;  // descending, same length as points
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Sweeps unique score values as thresholds, grouping ties into a single step.
// The AUC is the trapezoidal integral computed on integer confusion counts
// (numerator 2*concordant + ties over denominator 2*P*N), so it equals the
// Mann-Whitney pair statistic exactly, not just to rounding error.
// Throws DataError unless both classes are present; ShapeError on length
// mismatch. Labels must be 0 or 1.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ThresholdMetrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;  // TP / P, 0 when P == 0
  double specificity = 0.0;  // TN / N, 0 when N == 0
};

// Confusion-matrix rates for the classifier "score >= threshold".
ThresholdMetrics threshold_metrics(const std::vector<double>& scores,
                                   const std::vector<int>& labels, double threshold = 0.5);

// CSV with header "threshold,fpr,tpr", one row per curve point, then a final
// "auc,<value>" row. Round-trips doubles exactly (max_digits10 precision).
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

}  // namespace sbssl
