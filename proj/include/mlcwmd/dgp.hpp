#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mlcwmd/dataset.hpp"
#include "mlcwmd/ising.hpp"
#include "mlcwmd/rng.hpp"

namespace mlcwmd {

struct ClusterTruth {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  std::vector<Eigen::VectorXd> lambda;  // per categorical column
  Eigen::MatrixXd gamma;
  Eigen::VectorXd nu;
  Eigen::VectorXd beta;  // over the design [U..., V dummies..., D...]
  double sigma_b = 0.0;
};

struct GroundTruth {
  Eigen::VectorXd w;
  std::vector<ClusterTruth> clusters;
  int n_groups = 0;
  int n_per_group = 0;
  IsingDomain d_domain = IsingDomain::zero_one;
  std::vector<int> v_levels;  // categories per categorical column

  int n_clusters() const { return static_cast<int>(clusters.size()); }
  int p() const { return clusters.empty() ? 0 : static_cast<int>(clusters[0].mu.size()); }
  int q() const { return static_cast<int>(v_levels.size()); }
  int h() const { return clusters.empty() ? 0 : static_cast<int>(clusters[0].nu.size()); }
  int design_cols() const;
  void check() const;  // throws on inconsistent blocks
};

// The built-in three-cluster benchmark: w = (0.2, 0.3, 0.5), two
// correlated Gaussians, a 2- and a 3-level categorical, a 3-variable
// Ising block, and random intercepts with sd 2 across 10 groups of 200.
GroundTruth builtin_table1();

struct GeneratedData {
  Dataset ds;
  Eigen::VectorXi labels;     // true cluster 1..C
  Eigen::MatrixXd intercepts; // J x C realized b
};

// Per group, cluster labels are drawn from w and re-drawn (up to 100
// times) until every cluster appears in every group; covariates and the
// response then follow the cluster's blocks.
GeneratedData generate(const GroundTruth& gt, Rng& rng);

// Same mechanism without the stratification guarantee; groups are drawn
// uniformly from the training groups and random intercepts are re-drawn,
// not reused.
GeneratedData generate_test_split(const GroundTruth& gt, int n_test, Rng& rng);

// truth design row [u..., dummies(reference = category 1)..., d...]
Eigen::VectorXd truth_design_row(const GroundTruth& gt,
                                 const Eigen::VectorXd& u,
                                 const std::vector<int>& v,
                                 const Eigen::VectorXd& d);

}  // namespace mlcwmd
