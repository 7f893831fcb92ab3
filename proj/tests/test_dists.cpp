#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlcwmd/errors.hpp"
#include "mlcwmd/ising.hpp"
#include "mlcwmd/mvn.hpp"
#include "mlcwmd/optim.hpp"
#include "mlcwmd/rng.hpp"

using namespace mlcwmd;

namespace {

// the benchmark cluster-3 Ising block
IsingModel appendix_model() {
  Eigen::Vector3d nu(0.73, -0.23, 0.01);
  Eigen::Matrix3d gamma;
  gamma << 0, -4.15, 2.11, -4.15, 0, 1.14, 2.11, 1.14, 0;
  return IsingModel(nu, gamma, IsingDomain::zero_one);
}

struct TabulatedState {
  double prob;
  double d1, d2, d3;
};

// reference 3-decimal state distribution for that block
const TabulatedState k_state_table[] = {
    {0.039, 0, 0, 0}, {0.082, 1, 0, 0}, {0.031, 0, 1, 0}, {0.039, 0, 0, 1},
    {0.001, 1, 1, 0}, {0.682, 1, 0, 1}, {0.100, 0, 1, 1}, {0.026, 1, 1, 1},
};

IsingModel random_model(int h, IsingDomain dom, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd nu(h);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(h, h);
  for (int l = 0; l < h; ++l) nu[l] = scale * (2.0 * rng.uniform() - 1.0);
  for (int l = 0; l < h; ++l) {
    for (int k = l + 1; k < h; ++k) {
      gamma(l, k) = gamma(k, l) = scale * (2.0 * rng.uniform() - 1.0);
    }
  }
  return IsingModel(nu, gamma, dom);
}

}  // namespace

TEST_CASE("mvn log density at the mean under identity covariance") {
  Eigen::Vector2d mu(0.0, 0.0);
  CHECK(mvn_logpdf(mu, mu, Eigen::Matrix2d::Identity()) ==
        doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("mvn log density at the mean, correlated covariance") {
  Eigen::Vector2d mu(2.05, 0.13);
  Eigen::Matrix2d sigma;
  sigma << 0.7, 0.5, 0.5, 3.0;  // determinant 1.85
  const double expected = -0.5 * std::log(4.0 * M_PI * M_PI * 1.85);
  CHECK(mvn_logpdf(mu, mu, sigma) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mvn agrees with the explicit 2x2 quadratic form") {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::Vector2d mu(rng.normal(), rng.normal());
    Eigen::Vector2d u(mu[0] + rng.normal(), mu[1] + rng.normal());
    const double a = 0.5 + rng.uniform() * 2.0;
    const double d = 0.5 + rng.uniform() * 2.0;
    const double b = (2.0 * rng.uniform() - 1.0) * 0.8 * std::sqrt(a * d);
    Eigen::Matrix2d sigma;
    sigma << a, b, b, d;
    const double det = a * d - b * b;
    const Eigen::Vector2d r = u - mu;
    const double quad =
        (d * r[0] * r[0] - 2.0 * b * r[0] * r[1] + a * r[1] * r[1]) / det;
    const double expected = -std::log(2.0 * M_PI) - 0.5 * std::log(det) -
                            0.5 * quad;
    CHECK(mvn_logpdf(u, mu, sigma) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("mvn is invariant under coordinate permutation") {
  Rng rng(17);
  Eigen::Vector3d mu(0.4, -1.2, 2.2), u(1.0, 0.3, -0.7);
  Eigen::Matrix3d a;
  a << 2, .3, .1, .3, 1.5, -.2, .1, -.2, 1.1;
  Eigen::PermutationMatrix<3> perm;
  perm.indices() << 2, 0, 1;
  const double base = mvn_logpdf(u, mu, a);
  const Eigen::Matrix3d ap = perm * a * perm.transpose();
  CHECK(mvn_logpdf(perm * u, perm * mu, ap) ==
        doctest::Approx(base).epsilon(1e-12));
  (void)rng;
}

TEST_CASE("mvn rejects a covariance that stays non-PD after ridging") {
  Eigen::Vector2d mu(0, 0);
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_WITH_AS(MvnDensity(mu, bad, 1e-8, 1e-4, "cluster 2"),
                       doctest::Contains("cluster 2"), FitError);
}

TEST_CASE("batch mvn log densities match one-shot evaluation") {
  Rng rng(9);
  Eigen::Vector2d mu(1.0, -2.0);
  Eigen::Matrix2d sigma;
  sigma << 2.0, -1.0, -1.0, 3.0;
  MvnDensity d(mu, sigma);
  Eigen::MatrixXd rows(40, 2);
  for (int i = 0; i < rows.rows(); ++i) {
    rows(i, 0) = rng.normal() * 2;
    rows(i, 1) = rng.normal() * 2;
  }
  const Eigen::VectorXd batch = d.logpdf_rows(rows);
  for (int i = 0; i < rows.rows(); ++i) {
    CHECK(batch[i] == doctest::Approx(d.logpdf(rows.row(i))).epsilon(1e-12));
  }
}

TEST_CASE("multinomial log pmf") {
  Eigen::Vector3d lam(0.75, 0.18, 0.07);
  CHECK(multinomial_logpmf(1, lam) == doctest::Approx(std::log(0.75)));
  CHECK(multinomial_logpmf(3, lam) == doctest::Approx(std::log(0.07)));
  CHECK_THROWS_AS(multinomial_logpmf(0, lam), std::out_of_range);
  CHECK_THROWS_AS(multinomial_logpmf(4, lam), std::out_of_range);

  const Eigen::VectorXd unif = Eigen::VectorXd::Constant(5, 0.2);
  for (int v = 1; v <= 5; ++v) {
    CHECK(multinomial_logpmf(v, unif) == doctest::Approx(-std::log(5.0)));
  }
  double total = 0.0;
  for (int v = 1; v <= 3; ++v) total += std::exp(multinomial_logpmf(v, lam));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ising normalizer: free model counts states") {
  IsingModel m(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Zero(),
               IsingDomain::zero_one);
  CHECK(m.log_normalizer() == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("ising normalizer dominates every unnormalized weight") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const IsingModel m = random_model(4, IsingDomain::zero_one, rng, 2.0);
    for (int s = 0; s < 16; ++s) {
      CHECK(m.log_normalizer() >= m.energy(m.state_vector(s)) - 1e-12);
    }
  }
}

TEST_CASE("ising normalizer refuses beyond the enumeration cap") {
  const int h = 16;
  IsingModel m(Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(h, h),
               IsingDomain::zero_one);
  CHECK(!m.exact());
  CHECK_THROWS_AS((void)m.log_normalizer(), CapabilityError);
}

TEST_CASE("benchmark state table reproduced within the rounding band") {
  const IsingModel m = appendix_model();
  for (const auto& row : k_state_table) {
    Eigen::Vector3d d(row.d1, row.d2, row.d3);
    CHECK(std::abs(std::exp(m.logpmf(d)) - row.prob) <= 0.002);
  }
  // the two spotlight states
  CHECK(std::abs(std::exp(m.logpmf(Eigen::Vector3d(1, 0, 1))) - 0.682) <=
        0.002);
  const double p110 = std::exp(m.logpmf(Eigen::Vector3d(1, 1, 0)));
  CHECK(p110 >= 0.0005);
  CHECK(p110 <= 0.0015);
}

TEST_CASE("ising pmf normalizes") {
  const IsingModel m = appendix_model();
  double total = 0.0;
  for (int s = 0; s < 8; ++s) total += std::exp(m.logpmf(m.state_vector(s)));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    for (IsingDomain dom : {IsingDomain::zero_one, IsingDomain::plus_minus}) {
      const IsingModel r = random_model(5, dom, rng, 1.5);
      double t = 0.0;
      for (int s = 0; s < 32; ++s) t += std::exp(r.logpmf(r.state_vector(s)));
      CHECK(t == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("ising domain mismatch is rejected") {
  const IsingModel m = appendix_model();
  CHECK_THROWS_AS((void)m.logpmf(Eigen::Vector3d(1, -1, 1)), DataError);
}

TEST_CASE("conditional under the free model is a coin flip") {
  for (IsingDomain dom : {IsingDomain::zero_one, IsingDomain::plus_minus}) {
    IsingModel m(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Zero(), dom);
    for (int s = 0; s < 8; ++s) {
      const Eigen::VectorXd d = m.state_vector(s);
      for (int l = 0; l < 3; ++l) {
        CHECK(m.conditional(d, l) == doctest::Approx(0.5).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("conditional equals the enumeration-normalized conditional") {
  Rng rng(41);
  auto check_model = [](const IsingModel& m) {
    const int h = m.h();
    for (int s = 0; s < (1 << h); ++s) {
      const Eigen::VectorXd d = m.state_vector(s);
      for (int l = 0; l < h; ++l) {
        Eigen::VectorXd d_lo = d, d_hi = d;
        d_lo[l] = m.lo();
        d_hi[l] = m.hi();
        const double p_lo = std::exp(m.logpmf(d_lo));
        const double p_hi = std::exp(m.logpmf(d_hi));
        const double expected =
            (d[l] == m.hi() ? p_hi : p_lo) / (p_lo + p_hi);
        CHECK(m.conditional(d, l) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
  };
  check_model(appendix_model());
  for (int rep = 0; rep < 6; ++rep) {
    check_model(random_model(5, IsingDomain::zero_one, rng, 1.5));
    check_model(random_model(4, IsingDomain::plus_minus, rng, 1.5));
  }
}

TEST_CASE("pseudo log-likelihood basics") {
  IsingModel free(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Zero(),
                  IsingDomain::zero_one);
  Eigen::MatrixXd one_row(1, 3);
  one_row << 1, 0, 1;
  CHECK(ising_pseudo_loglik(one_row, Eigen::VectorXd::Ones(1), free) ==
        doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-12));
  CHECK(ising_pseudo_loglik(one_row, Eigen::VectorXd::Zero(1), free) ==
        doctest::Approx(0.0));
}

TEST_CASE("pseudo log-likelihood gradient matches central differences") {
  Rng rng(47);
  const IsingModel truth = appendix_model();
  const Eigen::MatrixXd rows = ising_sample(truth, 200, rng);
  Eigen::VectorXd w(200);
  for (int i = 0; i < 200; ++i) w[i] = rng.uniform();

  for (int rep = 0; rep < 5; ++rep) {
    const IsingModel at = random_model(3, IsingDomain::zero_one, rng, 1.0);
    const Eigen::VectorXd analytic = ising_pseudo_grad(rows, w, at);

    auto pack_loglik = [&](const Eigen::VectorXd& theta) {
      Eigen::Vector3d nu = theta.head(3);
      Eigen::Matrix3d gamma;
      gamma << 0, theta[3], theta[4], theta[3], 0, theta[5], theta[4],
          theta[5], 0;
      return ising_pseudo_loglik(rows, w,
                                 IsingModel(nu, gamma, IsingDomain::zero_one));
    };
    Eigen::VectorXd theta(6);
    theta << at.nu()[0], at.nu()[1], at.nu()[2], at.gamma()(0, 1),
        at.gamma()(0, 2), at.gamma()(1, 2);
    const Eigen::VectorXd fd = fd_gradient(pack_loglik, theta, 1e-6);
    for (int i = 0; i < 6; ++i) {
      CHECK(analytic[i] ==
            doctest::Approx(fd[i]).epsilon(1e-5).scale(std::abs(fd[i]) + 1.0));
    }
  }

  SUBCASE("same check on the plus-minus domain") {
    const IsingModel pm_truth =
        ising_convert_domain(truth, IsingDomain::plus_minus);
    const Eigen::MatrixXd pm_rows = ising_sample(pm_truth, 150, rng);
    Eigen::VectorXd wpm = Eigen::VectorXd::Ones(150);
    const IsingModel at = random_model(3, IsingDomain::plus_minus, rng, 0.7);
    const Eigen::VectorXd analytic = ising_pseudo_grad(pm_rows, wpm, at);
    auto pack_loglik = [&](const Eigen::VectorXd& theta) {
      Eigen::Vector3d nu = theta.head(3);
      Eigen::Matrix3d gamma;
      gamma << 0, theta[3], theta[4], theta[3], 0, theta[5], theta[4],
          theta[5], 0;
      return ising_pseudo_loglik(
          pm_rows, wpm, IsingModel(nu, gamma, IsingDomain::plus_minus));
    };
    Eigen::VectorXd theta(6);
    theta << at.nu()[0], at.nu()[1], at.nu()[2], at.gamma()(0, 1),
        at.gamma()(0, 2), at.gamma()(1, 2);
    const Eigen::VectorXd fd = fd_gradient(pack_loglik, theta, 1e-6);
    for (int i = 0; i < 6; ++i) {
      CHECK(analytic[i] ==
            doctest::Approx(fd[i]).epsilon(1e-5).scale(std::abs(fd[i]) + 1.0));
    }
  }
}

TEST_CASE("pseudo fit: uniform state data drives parameters to zero") {
  // all 8 states replicated equally = the free model's sufficient stats
  Eigen::MatrixXd rows(8 * 50, 3);
  IsingModel free(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Zero(),
                  IsingDomain::zero_one);
  for (int s = 0; s < 8; ++s) {
    for (int r = 0; r < 50; ++r) rows.row(s * 50 + r) = free.state_vector(s);
  }
  const IsingFitResult fit = ising_fit_pseudo(
      rows, Eigen::VectorXd::Ones(rows.rows()), IsingDomain::zero_one);
  CHECK(fit.converged);
  CHECK(fit.model.nu().cwiseAbs().maxCoeff() < 1e-3);
  CHECK(fit.model.gamma().cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("pseudo fit recovers the benchmark parameters from a large sample") {
  Rng rng(1234);
  const IsingModel truth = appendix_model();
  const Eigen::MatrixXd rows = ising_sample(truth, 100000, rng);
  const IsingFitResult fit = ising_fit_pseudo(
      rows, Eigen::VectorXd::Ones(rows.rows()), IsingDomain::zero_one);
  CHECK(fit.converged);
  CHECK(!fit.any_frozen);
  for (int l = 0; l < 3; ++l) {
    CHECK(std::abs(fit.model.nu()[l] - truth.nu()[l]) <= 0.15);
    for (int k = l + 1; k < 3; ++k) {
      CHECK(std::abs(fit.model.gamma()(l, k) - truth.gamma()(l, k)) <= 0.15);
    }
  }

  SUBCASE("fit is invariant to row order") {
    Eigen::MatrixXd reversed = rows.colwise().reverse();
    const IsingFitResult fit2 = ising_fit_pseudo(
        reversed, Eigen::VectorXd::Ones(rows.rows()), IsingDomain::zero_one);
    CHECK(fit2.model.nu().isApprox(fit.model.nu(), 1e-6));
    CHECK(fit2.model.gamma().isApprox(fit.model.gamma(), 1e-6));
  }
}

TEST_CASE("pseudo fit maximizes: perturbations only lower the objective") {
  Rng rng(99);
  IsingModel small(Eigen::Vector2d(0.4, -0.2),
                   (Eigen::Matrix2d() << 0, 0.8, 0.8, 0).finished(),
                   IsingDomain::zero_one);
  const Eigen::MatrixXd rows = ising_sample(small, 4000, rng);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(rows.rows());
  const IsingFitResult fit =
      ising_fit_pseudo(rows, w, IsingDomain::zero_one);
  const double at_mle = ising_pseudo_loglik(rows, w, fit.model);
  for (double delta : {-0.05, 0.05}) {
    for (int coord = 0; coord < 3; ++coord) {
      Eigen::VectorXd nu = fit.model.nu();
      Eigen::MatrixXd gamma = fit.model.gamma();
      if (coord < 2) {
        nu[coord] += delta;
      } else {
        gamma(0, 1) += delta;
        gamma(1, 0) += delta;
      }
      const double perturbed = ising_pseudo_loglik(
          rows, w, IsingModel(nu, gamma, IsingDomain::zero_one));
      CHECK(at_mle >= perturbed);
    }
  }
}

TEST_CASE("pseudo fit freezes a constant column") {
  Rng rng(7);
  Eigen::MatrixXd rows(60, 3);
  for (int i = 0; i < 60; ++i) {
    rows(i, 0) = rng.uniform() < 0.6 ? 1.0 : 0.0;
    rows(i, 1) = rng.uniform() < 0.4 ? 1.0 : 0.0;
    rows(i, 2) = 1.0;  // constant
  }
  const IsingFitResult fit = ising_fit_pseudo(
      rows, Eigen::VectorXd::Ones(60), IsingDomain::zero_one);
  CHECK(fit.any_frozen);
  REQUIRE(fit.frozen_variables.size() == 1);
  CHECK(fit.frozen_variables[0] == 2);
  CHECK(fit.model.nu()[2] == doctest::Approx(10.0));
  CHECK(fit.model.gamma().row(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pseudo fit requires h+1 effective rows") {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(ising_fit_pseudo(rows, Eigen::VectorXd::Ones(3),
                                   IsingDomain::zero_one),
                  FitError);
}

TEST_CASE("exact sampler reproduces the benchmark state frequencies") {
  Rng rng(2024);
  const IsingModel m = appendix_model();
  const int n = 1000000;
  const Eigen::MatrixXd rows = ising_sample(m, n, rng);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(8);
  for (int i = 0; i < n; ++i) {
    const int s = static_cast<int>(rows(i, 0)) + 2 * static_cast<int>(rows(i, 1)) +
                  4 * static_cast<int>(rows(i, 2));
    freq[s] += 1.0;
  }
  freq /= n;
  for (const auto& row : k_state_table) {
    const int s = static_cast<int>(row.d1) + 2 * static_cast<int>(row.d2) +
                  4 * static_cast<int>(row.d3);
    CHECK(std::abs(freq[s] - row.prob) <= 0.003);
  }
}

TEST_CASE("sampler saturates under a huge threshold") {
  IsingModel m(Eigen::Vector3d(10, 10, 10), Eigen::Matrix3d::Zero(),
               IsingDomain::zero_one);
  Rng rng(3);
  const Eigen::MatrixXd rows = ising_sample(m, 2000, rng);
  CHECK(rows.sum() >= 0.999 * 3 * 2000);
}

TEST_CASE("sampler is deterministic given the seed") {
  const IsingModel m = appendix_model();
  Rng a(55), b(55);
  CHECK(ising_sample(m, 500, a) == ising_sample(m, 500, b));
}

TEST_CASE("domain conversion") {
  SUBCASE("zero model maps to the zero model") {
    IsingModel z(Eigen::Vector3d::Zero(), Eigen::Matrix3d::Zero(),
                 IsingDomain::zero_one);
    const IsingModel c = ising_convert_domain(z, IsingDomain::plus_minus);
    CHECK(c.nu().cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.gamma().cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("state probabilities are preserved under the state map") {
    const IsingModel m = appendix_model();
    const IsingModel c = ising_convert_domain(m, IsingDomain::plus_minus);
    // state index encodes the same bit pattern in both domains
    const Eigen::VectorXd p0 = m.state_probabilities();
    const Eigen::VectorXd p1 = c.state_probabilities();
    for (int s = 0; s < 8; ++s) {
      CHECK(p0[s] == doctest::Approx(p1[s]).epsilon(1e-12));
    }
  }

  SUBCASE("conversion is an involution") {
    Rng rng(61);
    for (int rep = 0; rep < 10; ++rep) {
      const IsingModel m = random_model(4, IsingDomain::zero_one, rng, 2.0);
      const IsingModel back = ising_convert_domain(
          ising_convert_domain(m, IsingDomain::plus_minus),
          IsingDomain::zero_one);
      CHECK((back.nu() - m.nu()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((back.gamma() - m.gamma()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("batch log pmf matches per-row evaluation") {
  Rng rng(71);
  const IsingModel m = appendix_model();
  const Eigen::MatrixXd rows = ising_sample(m, 64, rng);
  const Eigen::VectorXd batch = m.logpmf_rows(rows);
  for (int i = 0; i < 64; ++i) {
    CHECK(batch[i] == doctest::Approx(m.logpmf(rows.row(i))).epsilon(1e-12));
  }
}
