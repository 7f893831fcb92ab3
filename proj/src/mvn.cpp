#include "mlcwmd/mvn.hpp"

#include <cmath>
#include <stdexcept>

#include "mlcwmd/errors.hpp"

namespace mlcwmd {

namespace {
constexpr double k_log_2pi = 1.8378770664093454836;
}

MvnDensity::MvnDensity(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
                       double ridge_start, double ridge_max,
                       const std::string& component)
    : mu_(std::move(mu)) {
  const int p = static_cast<int>(mu_.size());
  if (sigma.rows() != p || sigma.cols() != p) {
    throw FitError("covariance dimension mismatch" +
                   (component.empty() ? "" : " in " + component));
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-8)) {
    throw FitError("covariance not symmetric" +
                   (component.empty() ? "" : " in " + component));
  }

  double ridge = 0.0;
  double next = ridge_start > 0.0 ? ridge_start : 1e-8;
  for (;;) {
    sigma_ = sigma + ridge * Eigen::MatrixXd::Identity(p, p);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
    if (llt.info() == Eigen::Success &&
        llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
      chol_l_ = llt.matrixL();
      break;
    }
    if (ridge >= ridge_max) {
      throw FitError("covariance not positive definite after ridging" +
                     (component.empty() ? "" : " in " + component));
    }
    ridge = next;
    next *= 10.0;
  }
  ridge_used_ = ridge;
  log_norm_ = -0.5 * p * k_log_2pi -
              chol_l_.diagonal().array().log().sum();
}

double MvnDensity::logpdf(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd z =
      chol_l_.triangularView<Eigen::Lower>().solve(u - mu_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

Eigen::VectorXd MvnDensity::logpdf_rows(const Eigen::MatrixXd& u_rows) const {
  Eigen::MatrixXd centered =
      (u_rows.rowwise() - mu_.transpose()).transpose();  // p x N
  chol_l_.triangularView<Eigen::Lower>().solveInPlace(centered);
  return (log_norm_ -
          0.5 * centered.colwise().squaredNorm().array())
      .matrix()
      .transpose();
}

double mvn_logpdf(const Eigen::VectorXd& u, const Eigen::VectorXd& mu,
                  const Eigen::MatrixXd& sigma) {
  return MvnDensity(mu, sigma).logpdf(u);
}

double multinomial_logpmf(int v, const Eigen::VectorXd& lambda) {
  if (v < 1 || v > lambda.size()) {
    throw std::out_of_range("multinomial category " + std::to_string(v) +
                            " outside 1.." + std::to_string(lambda.size()));
  }
  return std::log(lambda[v - 1]);
}

}  // namespace mlcwmd
