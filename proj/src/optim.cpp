#include "mlcwmd/optim.hpp"

#include <cmath>
#include <limits>

namespace mlcwmd {

BfgsResult minimize_bfgs(const ObjectiveFn& fn, const Eigen::VectorXd& x0,
                         const BfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  BfgsResult res;
  res.x = x0;
  res.grad.resize(n);
  res.f = fn(res.x, &res.grad);

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x_new(n), g_new(n);

  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it;
    if (res.grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      return res;
    }

    Eigen::VectorXd dir = -(h_inv * res.grad);
    double slope = res.grad.dot(dir);
    if (!(slope < 0.0)) {  // lost positive definiteness; restart on steepest descent
      h_inv.setIdentity();
      dir = -res.grad;
      slope = res.grad.dot(dir);
    }

    // Armijo backtracking
    double step = opts.step_init;
    double f_new = std::numeric_limits<double>::infinity();
    const double c1 = 1e-4;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + step * dir;
      f_new = fn(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= res.f + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no acceptable step along this direction; gradient may be at noise level
      res.converged = res.grad.lpNorm<Eigen::Infinity>() <= 10 * opts.grad_tol;
      return res;
    }

    f_new = fn(x_new, &g_new);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd yv = g_new - res.grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      h_inv = (I - rho * s * yv.transpose()) * h_inv *
                  (I - rho * yv * s.transpose()) +
              rho * s * s.transpose();
    }
    res.x = x_new;
    res.f = f_new;
    res.grad = g_new;
  }
  res.converged = res.grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol;
  return res;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double rel_step) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Eigen::VectorXd nodes = es.eigenvalues();
  Eigen::VectorXd weights(n);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = sqrt_pi * v0 * v0;
  }
  return {nodes, weights};
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double rel_step) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd xp = x;
  const double f0 = f(x);
  Eigen::VectorXd hs(n);
  for (int i = 0; i < n; ++i) hs[i] = rel_step * std::max(1.0, std::abs(x[i]));

  for (int i = 0; i < n; ++i) {
    xp[i] = x[i] + hs[i];
    const double fpp_i = f(xp);
    xp[i] = x[i] - hs[i];
    const double fmm_i = f(xp);
    xp[i] = x[i];
    hess(i, i) = (fpp_i - 2.0 * f0 + fmm_i) / (hs[i] * hs[i]);
    for (int j = i + 1; j < n; ++j) {
      xp[i] = x[i] + hs[i];
      xp[j] = x[j] + hs[j];
      const double fpp = f(xp);
      xp[j] = x[j] - hs[j];
      const double fpm = f(xp);
      xp[i] = x[i] - hs[i];
      const double fmm = f(xp);
      xp[j] = x[j] + hs[j];
      const double fmp = f(xp);
      xp[i] = x[i];
      xp[j] = x[j];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hs[i] * hs[j]);
    }
  }
  return hess;
}

}  // namespace mlcwmd
