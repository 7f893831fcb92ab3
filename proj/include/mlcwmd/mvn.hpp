#pragma once

#include <Eigen/Dense>
#include <string>

namespace mlcwmd {

// Multivariate normal in frozen Cholesky form. Near-singular covariances
// get a ridge added on the diagonal, starting at `ridge_start` and
// escalating x10 up to `ridge_max`; past that, construction throws
// naming the component.
class MvnDensity {
 public:
  MvnDensity() = default;
  MvnDensity(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
             double ridge_start = 0.0, double ridge_max = 1e-4,
             const std::string& component = "");

  double logpdf(const Eigen::VectorXd& u) const;
  // rows of `u_rows` are observations
  Eigen::VectorXd logpdf_rows(const Eigen::MatrixXd& u_rows) const;

  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  double ridge_used() const { return ridge_used_; }
  int dim() const { return static_cast<int>(mu_.size()); }

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;   // after ridging
  Eigen::MatrixXd chol_l_;  // lower factor
  double log_norm_ = 0.0;   // -p/2 log(2pi) - sum log diag(L)
  double ridge_used_ = 0.0;
};

double mvn_logpdf(const Eigen::VectorXd& u, const Eigen::VectorXd& mu,
                  const Eigen::MatrixXd& sigma);

// log lambda[v-1] for 1-based category v; bounds- and support-checked.
double multinomial_logpmf(int v, const Eigen::VectorXd& lambda);

}  // namespace mlcwmd
