#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlcwmd/baselines.hpp"
#include "mlcwmd/dgp.hpp"
#include "mlcwmd/em.hpp"

namespace mlcwmd {

// Replicated benchmark protocol: generate train/test pairs from a ground
// truth, run BIC selection for both D treatments, fit the GLM and GLMM
// baselines on the same design, and collect selection, partition,
// accuracy and coefficient-recovery metrics per replicate.
struct SimStudyOptions {
  int replicates = 20;
  std::uint64_t seed = 1;
  int n_starts = 5;
  std::vector<int> c_grid{2, 3, 4};
  int n_test = 200;
  InitStrategy init = InitStrategy::kmeans;
  int jobs = 1;
  int recovery_c = 3;  // cluster count whose fit feeds coefficient recovery
};

struct MethodMetrics {
  bool ok = false;
  std::string error;
  int selected_c = 0;
  double bic = std::numeric_limits<double>::quiet_NaN();
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double ari = std::numeric_limits<double>::quiet_NaN();
  double train_accuracy = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  double train_auc = std::numeric_limits<double>::quiet_NaN();
  double cutoff = std::numeric_limits<double>::quiet_NaN();
};

struct ReplicateResult {
  int replicate = 0;
  MethodMetrics cwmd, cwmd_nod, glmer, glm;
  std::vector<SelectRow> table_full, table_nod;
  // per-truth-cluster coefficients of the recovery_c full fit, rows
  // matched to the ground truth clusters; empty when that fit failed
  Eigen::MatrixXd beta_recovery;
  Eigen::VectorXd sigma_b_recovery;
  Eigen::VectorXd beta_glm;
  double min_trace_delta = std::numeric_limits<double>::infinity();
  double elapsed_seconds = 0.0;
};

struct SimStudyResult {
  GroundTruth truth;
  std::vector<std::string> design_names;  // truth design column order
  Eigen::MatrixXd beta_truth;             // C x m
  std::vector<ReplicateResult> replicates;
};

SimStudyResult run_sim_study(const GroundTruth& truth,
                             const SimStudyOptions& opts);

// column names of the truth design, e.g. x1, x2, a1=2, a2=2, a2=3, d1...
std::vector<std::string> truth_design_names(const GroundTruth& gt);

// Map fitted components onto truth clusters by total mean distance over
// all permutations; returns per-truth-cluster fitted indices.
std::vector<int> match_components_to_truth(const ModelFit& fit,
                                           const GroundTruth& gt);

// Coefficients of a fit reordered to the truth design columns (the fit
// names its design columns after dataset levels). NaN for columns the
// fit does not carry.
Eigen::VectorXd align_beta_to_truth(const Eigen::VectorXd& beta,
                                    const std::vector<std::string>& fit_names,
                                    const std::vector<std::string>& truth_names);

}  // namespace mlcwmd
