#include "diffmia/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffmia {

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("roc_curve: scores and labels length mismatch");
  }
  size_t members = 0, nonmembers = 0;
  for (int m : labels) (m ? members : nonmembers) += 1;
  if (members == 0 || nonmembers == 0) {
    throw std::invalid_argument("roc_curve: both classes must be present");
  }

  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, -std::numeric_limits<double>::infinity()});
  size_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double v = scores[order[i]];
    // All samples sharing this score value flip together.
    while (i < order.size() && scores[order[i]] == v) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(nonmembers),
                            static_cast<double>(tp) / static_cast<double>(members), v});
  }

  double auc = 0.0;
  for (size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  curve.auc = auc;
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double fpr_target) {
  if (fpr_target < 0.0 || fpr_target > 1.0) {
    throw std::invalid_argument("tpr_at_fpr: target must be in [0, 1]");
  }
  double best = 0.0;
  for (const auto& p : curve.points) {
    if (p.fpr <= fpr_target) best = std::max(best, p.tpr);
  }
  return best;
}

std::pair<double, double> accuracy_f1_at_median(const std::vector<double>& scores,
                                                const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw std::invalid_argument("accuracy_f1_at_median: bad input lengths");
  }
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const double threshold =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < n; ++i) {
    const bool predicted = scores[i] < threshold;
    if (predicted && labels[i]) ++tp;
    else if (predicted && !labels[i]) ++fp;
    else if (!predicted && !labels[i]) ++tn;
    else ++fn;
  }
  const double accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
  double f1 = 0.0;
  if (tp > 0) {
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    f1 = 2.0 * precision * recall / (precision + recall);
  }
  return {accuracy, f1};
}

AttackReport evaluate_attack(const std::vector<double>& scores, const std::vector<int>& labels) {
  AttackReport report;
  const RocCurve curve = roc_curve(scores, labels);
  report.auc = curve.auc;
  report.tpr_at[0.001] = tpr_at_fpr(curve, 0.001);
  report.tpr_at[0.01] = tpr_at_fpr(curve, 0.01);
  const auto [accuracy, f1] = accuracy_f1_at_median(scores, labels);
  report.accuracy = accuracy;
  report.f1 = f1;
  return report;
}

}  // namespace diffmia
