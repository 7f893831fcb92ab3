#pragma once

#include <array>
#include <string>
#include <vector>

#include "mlcwmd/em.hpp"

namespace mlcwmd {

enum class BMode { group_or_zero, zero, minus_sigma, plus_sigma };

std::string to_string(BMode m);
BMode b_mode_from_string(const std::string& s);

struct Prediction {
  double p = 0.0;                   // marginal event probability
  Eigen::VectorXd posterior;        // covariate-based mixture weights
  Eigen::VectorXd p_conditional;    // per-cluster event probabilities
  std::string b_mode;
};

// Mixture prediction for every row of a schema-encoded dataset. With
// group_or_zero the random intercept is the group's fitted mode (0 for
// unseen groups); the sigma modes shift each component by its own
// +/- sigma_b.
std::vector<Prediction> predict_rows(const ModelFit& fit, const Dataset& ds,
                                     BMode mode);

// convenience: scores only
Eigen::VectorXd predict_score_vector(const ModelFit& fit, const Dataset& ds,
                                     BMode mode);

// predictions at b in {-sigma, 0, +sigma} per row
struct ScenarioCell {
  Prediction at_minus, at_zero, at_plus;
};
std::vector<ScenarioCell> scenario_rows(const ModelFit& fit, const Dataset& ds);

// Groups whose fitted intercept interval b_hat +/- z * conditional sd
// excludes zero, per cluster: +1 raises the event probability, -1
// lowers it, 0 not distinguishable.
Eigen::MatrixXi flag_group_effects(const ModelFit& fit, double z = 1.96);

}  // namespace mlcwmd
