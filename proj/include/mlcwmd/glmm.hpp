#pragma once

#include <Eigen/Dense>

namespace mlcwmd {

struct GlmOptions {
  double dev_tol = 1e-8;
  int max_iterations = 100;
  double beta_cap = 15.0;
};

struct GlmFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd p_value;
  double loglik = 0.0;
  bool converged = false;
  bool separation = false;
  int iterations = 0;
};

// Weighted logistic regression by Newton-Raphson IRLS; coefficients past
// beta_cap are clamped and the fit flagged (separation).
GlmFit fit_logistic_glm(const Eigen::MatrixXd& f, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, const GlmOptions& opts = {});

struct MixedOptions {
  double grad_tol = 1e-6;
  int max_outer = 200;
  double beta_cap = 15.0;
  double inner_tol = 1e-10;
  int inner_max = 60;
  double log_sigma_hi = 3.912;  // log(50)
  bool compute_se = true;
  // warm start
  const Eigen::VectorXd* beta_init = nullptr;
  double sigma_init = 1.0;
};

struct MixedFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd p_value;
  double sigma_b = 0.0;
  Eigen::VectorXd b_hat;  // length J, zero for groups without weighted rows
  Eigen::VectorXd b_sd;   // conditional sd; sigma_b where the group is unseen
  double loglik = 0.0;    // Laplace-approximate marginal log-likelihood
  bool converged = false;
  bool separation = false;
  int n_used = 0;
  int outer_iterations = 0;
};

// Random-intercept logistic regression logit(pi) = f'beta + b_g,
// b_g ~ N(0, sigma_b^2), maximized under the Laplace approximation:
// Newton for each group mode inside, quasi-Newton over (beta, log sigma_b)
// outside. Weights are per-row in [0,1]; groups are 1..n_groups.
MixedFit fit_logistic_mixed(const Eigen::MatrixXd& f,
                            const Eigen::VectorXi& groups, int n_groups,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            const MixedOptions& opts = {});

// Laplace marginal log-likelihood at fixed parameters (test surface).
double mixed_marginal_loglik(const Eigen::MatrixXd& f,
                             const Eigen::VectorXi& groups, int n_groups,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             const Eigen::VectorXd& beta, double sigma_b);

// Observed-information Wald standard errors and two-sided p-values for
// beta at fixed (beta, sigma_b); non-identifiable columns get NaN.
std::pair<Eigen::VectorXd, Eigen::VectorXd> mixed_wald_stats(
    const Eigen::MatrixXd& f, const Eigen::VectorXi& groups, int n_groups,
    const Eigen::VectorXd& y, const Eigen::VectorXd& w,
    const Eigen::VectorXd& beta, double sigma_b);

// Per-row marginal Bernoulli log-likelihood with the random intercept
// integrated out by Gauss-Hermite quadrature (fresh b per row).
Eigen::VectorXd marginal_loglik_rows(const Eigen::VectorXd& beta,
                                     double sigma_b, const Eigen::MatrixXd& f,
                                     const Eigen::VectorXi& y, int nodes = 20);

// Per-row Bernoulli log-likelihood at eta = f'beta + b_hat[group]
// (b = 0 for group id 0 or groups beyond b_hat's length).
Eigen::VectorXd conditional_loglik(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& b_hat,
                                   const Eigen::MatrixXd& f,
                                   const Eigen::VectorXi& groups,
                                   const Eigen::VectorXi& y);

// two-sided normal p-value for estimate/se
double wald_p(double estimate, double se);

}  // namespace mlcwmd
