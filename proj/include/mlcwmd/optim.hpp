#pragma once

#include <Eigen/Dense>
#include <functional>

namespace mlcwmd {

// f(x, grad_out): returns the objective; fills the gradient when
// grad_out != nullptr. Minimization.
using ObjectiveFn =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct BfgsOptions {
  int max_iterations = 200;
  double grad_tol = 1e-6;  // infinity norm
  double step_init = 1.0;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

// Dense BFGS with Armijo backtracking. Objective may return +inf to
// reject a trial point.
BfgsResult minimize_bfgs(const ObjectiveFn& fn, const Eigen::VectorXd& x0,
                         const BfgsOptions& opts = {});

// Central-difference gradient, used for gradient checks and for the
// observed-information standard errors.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double rel_step = 1e-6);

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double rel_step = 1e-4);

// Gauss-Hermite nodes and weights for integral e^{-t^2} h(t) dt,
// by Golub-Welsch on the Jacobi matrix.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n);

}  // namespace mlcwmd
