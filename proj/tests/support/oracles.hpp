// Test-only reference implementations. These deliberately avoid the
// library's estimation paths: a derivative-free simplex minimizer for the
// closed-form update checks, and an adaptive Gauss-Hermite integrator for
// the Laplace-approximation checks.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "mlcwmd/optim.hpp"

namespace oracles {

struct NmOptions {
  int max_iterations = 20000;
  double f_tol = 1e-13;
  double x_tol = 1e-12;
  double init_step = 0.25;
};

// Nelder-Mead simplex minimization.
inline Eigen::VectorXd nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const NmOptions& opts = {}) {
  const int n = static_cast<int>(x0.size());
  const int m = n + 1;
  std::vector<Eigen::VectorXd> pts(m, x0);
  std::vector<double> fv(m);
  for (int i = 0; i < n; ++i) {
    pts[i + 1][i] += opts.init_step * std::max(1.0, std::abs(x0[i]));
  }
  for (int i = 0; i < m; ++i) fv[i] = f(pts[i]);

  std::vector<int> ord(m);
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = ord[0], worst = ord[m - 1], second = ord[m - 2];

    double spread = 0.0;
    for (int i = 1; i < m; ++i) {
      spread = std::max(spread, (pts[ord[i]] - pts[best]).lpNorm<Eigen::Infinity>());
    }
    if (std::abs(fv[worst] - fv[best]) < opts.f_tol && spread < opts.x_tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= n;

    const Eigen::VectorXd refl = centroid + (centroid - pts[worst]);
    const double f_refl = f(refl);
    if (f_refl < fv[best]) {
      const Eigen::VectorXd expd = centroid + 2.0 * (centroid - pts[worst]);
      const double f_expd = f(expd);
      if (f_expd < f_refl) {
        pts[worst] = expd;
        fv[worst] = f_expd;
      } else {
        pts[worst] = refl;
        fv[worst] = f_refl;
      }
    } else if (f_refl < fv[second]) {
      pts[worst] = refl;
      fv[worst] = f_refl;
    } else {
      const Eigen::VectorXd contr = centroid + 0.5 * (pts[worst] - centroid);
      const double f_contr = f(contr);
      if (f_contr < fv[worst]) {
        pts[worst] = contr;
        fv[worst] = f_contr;
      } else {
        for (int i = 0; i < m; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          fv[i] = f(pts[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < m; ++i) {
    if (fv[i] < fv[best]) best = i;
  }
  return pts[best];
}

// Marginal log-likelihood of a single-group random-intercept logistic
// model by adaptive Gauss-Hermite quadrature: nodes centered at the
// integrand's mode and scaled by its curvature.
inline double agh_marginal_loglik(const Eigen::MatrixXd& f,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& beta, double sigma_b,
                                  int nodes = 64) {
  const Eigen::VectorXd eta0 = f * beta;
  const double inv_s2 = 1.0 / (sigma_b * sigma_b);

  auto g = [&](double b) {
    double acc = -0.5 * b * b * inv_s2 -
                 0.5 * std::log(2.0 * M_PI * sigma_b * sigma_b);
    for (long i = 0; i < y.size(); ++i) {
      const double eta = eta0[i] + b;
      acc += y[i] * eta - (eta > 30 ? eta : std::log1p(std::exp(eta)));
    }
    return acc;
  };

  // mode by Newton
  double b = 0.0;
  for (int it = 0; it < 200; ++it) {
    double score = -b * inv_s2, curv = inv_s2;
    for (long i = 0; i < y.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(eta0[i] + b)));
      score += y[i] - p;
      curv += p * (1.0 - p);
    }
    const double step = score / curv;
    b += step;
    if (std::abs(step) < 1e-13) break;
  }
  double curv = inv_s2;
  for (long i = 0; i < y.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(eta0[i] + b)));
    curv += p * (1.0 - p);
  }
  const double tau = 1.0 / std::sqrt(curv);

  const auto [t, w] = mlcwmd::gauss_hermite(nodes);
  const double sqrt2_tau = std::sqrt(2.0) * tau;
  double mx = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd expo(nodes);
  for (int k = 0; k < nodes; ++k) {
    expo[k] = g(b + sqrt2_tau * t[k]) + t[k] * t[k] + std::log(w[k]);
    mx = std::max(mx, expo[k]);
  }
  double acc = 0.0;
  for (int k = 0; k < nodes; ++k) acc += std::exp(expo[k] - mx);
  return std::log(sqrt2_tau) + mx + std::log(acc);
}

}  // namespace oracles
