#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mlcwmd/em.hpp"

namespace mlcwmd {

// Re-encode a dataset's categorical and group labels with a fitted
// model's schema (error on unknown categorical levels; unseen groups
// get id 0).
Dataset reencode_with_schema(const Dataset& ds, const DataSchema& schema);

struct BaselineRow {
  std::string method;  // ml-cwmd | ml-cwmd-nod | glmer | glm
  bool ok = false;
  std::string error;
  int selected_c = 0;  // mixture methods only
  double cutoff = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double train_auc = 0.0;
  double bic = 0.0;
  double ari_train = std::numeric_limits<double>::quiet_NaN();
  double loglik = 0.0;
};

struct BaselineReport {
  std::vector<BaselineRow> rows;
  std::optional<ModelFit> cwmd_fit;      // surviving full-model fit
  std::optional<ModelFit> cwmd_nod_fit;
};

// Fits the mixture model (both D treatments), a plain logistic GLM and a
// random-intercept logistic GLMM on the training data; each model's
// cutoff comes from its own training ROC and carries over to the test
// split. Per-method failures land in the row, the table still returns.
BaselineReport compare_baselines(const Dataset& train, const Dataset& test,
                                 const FitConfig& cfg,
                                 const Eigen::VectorXi* truth_train = nullptr);

}  // namespace mlcwmd
