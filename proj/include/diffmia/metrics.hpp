#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace diffmia {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // score value whose <=-set realizes this point
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted by fpr, from (0,0) to (1,1)
  double auc = 0.0;
};

struct AttackReport {
  double auc = 0.0;
  std::map<double, double> tpr_at;  // fpr target -> tpr
  double accuracy = 0.0;
  double f1 = 0.0;
  std::string scenario;
  std::string statistic;
  double truncation_fraction = 0.0;
  uint64_t seed = 0;
  std::string config_hash;
};

// ROC under the lower-score-means-member orientation. Thresholds sweep the
// distinct score values with ties grouped; AUC is the trapezoidal integral,
// which equals P(member < non-member) + P(equal)/2.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Largest TPR among operating points with FPR <= fpr_target; step-function
// convention, no interpolation.
double tpr_at_fpr(const RocCurve& curve, double fpr_target);

// Threshold at the median score, member predicted iff score < threshold.
// Returns (accuracy, f1); f1 is 0 when nothing is predicted member.
std::pair<double, double> accuracy_f1_at_median(const std::vector<double>& scores,
                                                const std::vector<int>& labels);

// Full evaluation at the standard low-FPR operating points (0.001, 0.01).
AttackReport evaluate_attack(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace diffmia
