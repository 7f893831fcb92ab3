#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mlcwmd/dataset.hpp"

namespace mlcwmd {

// Fixed-effect design built from named dataset columns. Categorical
// columns expand to k-1 dummies against the first-appearance reference
// level, named "col=level"; continuous, dichotomous and fixed-only
// columns enter as single numeric columns.
struct Design {
  Eigen::MatrixXd F;
  std::vector<std::string> names;
  bool intercept = false;
  int m() const { return static_cast<int>(F.cols()); }
};

Design build_design(const Dataset& ds, const std::vector<std::string>& formula,
                    bool intercept);

// Every covariate column in dataset order: U, V, D, then fixed-only.
std::vector<std::string> default_formula(const Dataset& ds);

}  // namespace mlcwmd
