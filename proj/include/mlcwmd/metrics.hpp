#pragma once

#include <Eigen/Dense>

namespace mlcwmd {

struct RocResult {
  double auc = 0.0;
  double cutoff = 0.5;   // classify positive when score >= cutoff
  double accuracy = 0.0; // at that cutoff
  double sensitivity = 0.0;
  double specificity = 0.0;
};

// Empirical ROC by threshold sweep: trapezoid AUC, cutoff maximizing
// Youden's J (ties resolved toward the lower cutoff). Throws when only
// one class is present.
RocResult roc_cutoff(const Eigen::VectorXd& scores,
                     const Eigen::VectorXi& labels);

double accuracy_at(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels,
                   double cutoff);

// Permutation-model adjusted Rand index between two labelings.
double adjusted_rand_index(const Eigen::VectorXi& a, const Eigen::VectorXi& b);

}  // namespace mlcwmd
