#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlcwmd/dgp.hpp"
#include "mlcwmd/errors.hpp"
#include "mlcwmd/glmm.hpp"
#include "mlcwmd/kern/kernels.hpp"
#include "mlcwmd/rng.hpp"
#include "support/oracles.hpp"

using namespace mlcwmd;

namespace {

struct Sim {
  Eigen::MatrixXd f;
  Eigen::VectorXi groups;
  Eigen::VectorXd y;
  int n_groups;
};

Sim simulate_mixed(int n_per_group, int n_groups, const Eigen::VectorXd& beta,
                   double sigma_b, Rng& rng, bool intercept = true) {
  const int m = static_cast<int>(beta.size());
  const int n = n_per_group * n_groups;
  Sim s;
  s.n_groups = n_groups;
  s.f.resize(n, m);
  s.groups.resize(n);
  s.y.resize(n);
  int row = 0;
  for (int j = 0; j < n_groups; ++j) {
    const double b = sigma_b * rng.normal();
    for (int i = 0; i < n_per_group; ++i, ++row) {
      s.f(row, 0) = intercept ? 1.0 : rng.normal();
      for (int k = 1; k < m; ++k) s.f(row, k) = rng.normal();
      s.groups[row] = j + 1;
      const double eta = s.f.row(row).dot(beta) + b;
      s.y[row] = rng.uniform() < kern::sigmoid(eta) ? 1.0 : 0.0;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("glm: intercept-only estimate is the logit of the weighted mean") {
  Rng rng(1);
  const int n = 400;
  Eigen::MatrixXd f = Eigen::MatrixXd::Ones(n, 1);
  Eigen::VectorXd y(n), w(n);
  for (int i = 0; i < n; ++i) {
    y[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
    w[i] = 0.25 + rng.uniform();
  }
  const GlmFit fit = fit_logistic_glm(f, y, w);
  const double mean = y.dot(w) / w.sum();
  CHECK(fit.converged);
  CHECK(fit.beta[0] ==
        doctest::Approx(std::log(mean / (1.0 - mean))).epsilon(1e-7));
}

TEST_CASE("glm: independent response gives small coefficients, sane p-values") {
  Rng rng(2);
  const int n = 4000;
  Eigen::MatrixXd f(n, 3);
  Eigen::VectorXd y(n);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    f(i, 0) = 1.0;
    f(i, 1) = rng.normal();
    f(i, 2) = rng.normal();
    y[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  const GlmFit fit = fit_logistic_glm(f, y, w);
  CHECK(fit.converged);
  CHECK(std::abs(fit.beta[1]) < 0.1);
  CHECK(std::abs(fit.beta[2]) < 0.1);
  for (int k = 0; k < 3; ++k) {
    CHECK(fit.p_value[k] >= 0.0);
    CHECK(fit.p_value[k] <= 1.0);
  }
}

TEST_CASE("glm: separation clamps and flags") {
  Eigen::MatrixXd f(6, 2);
  f << 1, -2, 1, -1, 1, -0.5, 1, 0.5, 1, 1, 1, 2;
  Eigen::VectorXd y(6);
  y << 0, 0, 0, 1, 1, 1;
  const GlmFit fit =
      fit_logistic_glm(f, y, Eigen::VectorXd::Ones(6));
  CHECK(fit.separation);
  CHECK(!fit.converged);
  CHECK(fit.beta.cwiseAbs().maxCoeff() <= 15.0 + 1e-9);
}

TEST_CASE("mixed fit matches the plain glm when sigma_b is forced to zero") {
  Rng rng(3);
  Eigen::VectorXd beta(3);
  beta << -0.4, 0.9, -0.6;
  const Sim s = simulate_mixed(60, 8, beta, 0.0, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(s.f.rows());

  const GlmFit glm = fit_logistic_glm(s.f, s.y, w);
  const double at_glm_beta =
      mixed_marginal_loglik(s.f, s.groups, s.n_groups, s.y, w, glm.beta, 1e-8);
  CHECK(at_glm_beta == doctest::Approx(glm.loglik).epsilon(1e-6));
}

TEST_CASE("mixed fit on sigma_b = 0 data collapses to the glm") {
  Rng rng(4);
  Eigen::VectorXd beta(3);
  beta << 0.3, -1.0, 0.7;
  const Sim s = simulate_mixed(80, 10, beta, 0.0, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(s.f.rows());

  const MixedFit mixed = fit_logistic_mixed(s.f, s.groups, s.n_groups, s.y, w);
  const GlmFit glm = fit_logistic_glm(s.f, s.y, w);
  CHECK(mixed.sigma_b <= 0.05);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(mixed.beta[k] - glm.beta[k]) <=
          2.0 * std::max(glm.se[k], 1e-3));
  }
}

TEST_CASE("laplace log-likelihood tracks the quadrature oracle") {
  // five single-group instances of 50 rows
  for (std::uint64_t seed : {10, 11, 12, 13, 14}) {
    Rng rng(seed);
    Eigen::VectorXd beta(2);
    beta << 0.5 - 0.1 * static_cast<double>(seed % 5), 0.8;
    const Sim s = simulate_mixed(50, 1, beta, 1.0, rng);
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(50);

    for (double sigma : {0.5, 1.0, 2.0}) {
      const double laplace =
          mixed_marginal_loglik(s.f, s.groups, 1, s.y, w, beta, sigma);
      const double oracle = oracles::agh_marginal_loglik(s.f, s.y, beta, sigma);
      CHECK(std::abs(laplace - oracle) <= 1e-2);
    }
  }
}

TEST_CASE("fitted sigma_b lands near truth on grouped data") {
  // random-intercept sd 2 across 10 groups; interval spans the J=10
  // sampling spread of the sd estimate
  int inside = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    Eigen::VectorXd beta(2);
    beta << -0.5, 1.0;
    const Sim s = simulate_mixed(100, 10, beta, 2.0, rng);
    const MixedFit fit = fit_logistic_mixed(
        s.f, s.groups, s.n_groups, s.y, Eigen::VectorXd::Ones(s.f.rows()));
    if (fit.sigma_b >= 1.0 && fit.sigma_b <= 3.0) ++inside;
  }
  CHECK(inside == 20);
}

TEST_CASE("laplace marginal log-likelihood is invariant to group relabeling") {
  Rng rng(5);
  Eigen::VectorXd beta(2);
  beta << 0.2, -0.8;
  const Sim s = simulate_mixed(40, 6, beta, 1.5, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(s.f.rows());
  const double base =
      mixed_marginal_loglik(s.f, s.groups, s.n_groups, s.y, w, beta, 1.2);

  Eigen::VectorXi relabeled = s.groups;
  for (int i = 0; i < relabeled.size(); ++i) {
    relabeled[i] = (relabeled[i] % s.n_groups) + 1;  // cyclic shift
  }
  CHECK(mixed_marginal_loglik(s.f, relabeled, s.n_groups, s.y, w, beta, 1.2) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("the fit is exactly invariant to positive weight rescaling") {
  Rng rng(6);
  Eigen::VectorXd beta(2);
  beta << 0.6, -0.4;
  const Sim s = simulate_mixed(50, 8, beta, 1.0, rng);
  const Eigen::VectorXd w1 = Eigen::VectorXd::Ones(s.f.rows());

  const MixedFit f1 = fit_logistic_mixed(s.f, s.groups, s.n_groups, s.y, w1);
  for (double scale : {2.0, 0.125, 7.5}) {
    const Eigen::VectorXd w2 = scale * w1;
    const MixedFit f2 = fit_logistic_mixed(s.f, s.groups, s.n_groups, s.y, w2);
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(f1.beta[k] - f2.beta[k]) < 1e-12);
    }
    CHECK(std::abs(f1.sigma_b - f2.sigma_b) < 1e-12);
    CHECK(std::abs(f1.loglik - f2.loglik) < 1e-10);
  }
}

TEST_CASE("analytic outer gradient matches finite differences") {
  Rng rng(7);
  Eigen::VectorXd beta(3);
  beta << 0.1, 0.7, -0.5;
  const Sim s = simulate_mixed(30, 5, beta, 1.0, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(s.f.rows());

  auto nll = [&](const Eigen::VectorXd& theta) {
    return -mixed_marginal_loglik(s.f, s.groups, s.n_groups, s.y, w,
                                  theta.head(3), std::exp(theta[3]));
  };
  // probe the internal gradient through the public fit: at the optimum the
  // finite-difference gradient must vanish
  const MixedFit fit = fit_logistic_mixed(s.f, s.groups, s.n_groups, s.y, w);
  REQUIRE(fit.converged);
  Eigen::VectorXd theta(4);
  theta << fit.beta, std::log(fit.sigma_b);
  const Eigen::VectorXd g = fd_gradient(nll, theta, 1e-5);
  CHECK(g.lpNorm<Eigen::Infinity>() < 5e-4 * s.f.rows());
}

TEST_CASE("groups without weighted rows carry b=0 and sd=sigma_b") {
  Rng rng(8);
  Eigen::VectorXd beta(2);
  beta << 0.4, -0.7;
  const Sim s = simulate_mixed(50, 6, beta, 1.0, rng);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(s.f.rows());
  for (int i = 0; i < s.f.rows(); ++i) {
    if (s.groups[i] == 3) w[i] = 0.0;  // silence group 3
  }
  const MixedFit fit = fit_logistic_mixed(s.f, s.groups, s.n_groups, s.y, w);
  CHECK(fit.b_hat[2] == 0.0);
  CHECK(fit.b_sd[2] == doctest::Approx(fit.sigma_b));
  CHECK(fit.n_used == s.f.rows() - 50);
}

TEST_CASE("single-class weighted rows are an error") {
  Rng rng(9);
  Eigen::VectorXd beta(2);
  beta << 0.0, 0.5;
  Sim s = simulate_mixed(30, 3, beta, 0.5, rng);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(s.f.rows());
  for (int i = 0; i < s.f.rows(); ++i) {
    if (s.y[i] == 1.0) w[i] = 1.0;  // only positives weighted
  }
  CHECK_THROWS_AS(fit_logistic_mixed(s.f, s.groups, s.n_groups, s.y, w),
                  FitError);
}

TEST_CASE("inner mode satisfies its first-order condition") {
  Rng rng(10);
  Eigen::VectorXd beta(2);
  beta << 0.3, 0.9;
  const Sim s = simulate_mixed(40, 5, beta, 1.5, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(s.f.rows());
  const MixedFit fit = fit_logistic_mixed(s.f, s.groups, s.n_groups, s.y, w);

  // recompute the score at each reported mode
  for (int j = 0; j < s.n_groups; ++j) {
    double score = -fit.b_hat[j] / (fit.sigma_b * fit.sigma_b);
    for (int i = 0; i < s.f.rows(); ++i) {
      if (s.groups[i] != j + 1) continue;
      const double eta = s.f.row(i).dot(fit.beta) + fit.b_hat[j];
      score += s.y[i] - kern::sigmoid(eta);
    }
    CHECK(std::abs(score) <= 1e-8);
  }
}

TEST_CASE("conditional per-row log-likelihood") {
  Eigen::MatrixXd f(3, 1);
  f << 0.3, 40.0, 0.0;
  Eigen::VectorXi groups(3);
  groups << 1, 1, 2;
  Eigen::VectorXi y(3);
  y << 1, 1, 0;
  Eigen::VectorXd beta(1);
  beta << 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2);

  const Eigen::VectorXd ll = conditional_loglik(beta, b, f, groups, y);
  CHECK(ll[0] == doctest::Approx(-std::log1p(std::exp(-0.3))).epsilon(1e-12));
  CHECK(ll[1] == doctest::Approx(0.0).epsilon(1e-12));  // eta -> +inf, y = 1
  CHECK(ll[2] == doctest::Approx(std::log(0.5)).epsilon(1e-12));  // pi = 0.5
}

TEST_CASE("marginal per-row log-likelihood integrates to sane values") {
  Eigen::MatrixXd f(2, 1);
  f << 0.0, 0.0;
  Eigen::VectorXi y(2);
  y << 1, 0;
  Eigen::VectorXd beta(1);
  beta << 0.0;
  // symmetric: P(y=1) = 1/2 exactly for eta = b ~ N(0, s^2)
  const Eigen::VectorXd ll = marginal_loglik_rows(beta, 1.7, f, y, 40);
  CHECK(ll[0] == doctest::Approx(std::log(0.5)).epsilon(1e-8));
  CHECK(ll[1] == doctest::Approx(std::log(0.5)).epsilon(1e-8));
}
