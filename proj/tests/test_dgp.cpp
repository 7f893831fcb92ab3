#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlcwmd/dgp.hpp"
#include "mlcwmd/rng.hpp"

using namespace mlcwmd;

TEST_CASE("builtin truth carries the expected constants") {
  const GroundTruth gt = builtin_table1();
  CHECK(gt.w[0] == 0.2);
  CHECK(gt.w[1] == 0.3);
  CHECK(gt.w[2] == 0.5);
  CHECK(gt.n_groups == 10);
  CHECK(gt.n_per_group == 200);
  CHECK(gt.design_cols() == 8);

  const auto& c3 = gt.clusters[2];
  CHECK(c3.gamma(0, 1) == -4.15);
  CHECK(c3.gamma(0, 2) == 2.11);
  CHECK(c3.gamma(1, 2) == 1.14);
  CHECK(c3.gamma(1, 0) == -4.15);
  CHECK(c3.gamma.diagonal().cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd beta2_expected(8);
  beta2_expected << -0.07, 0.79, -0.46, 0.25, -3.89, -0.63, 0.63, -1.51;
  CHECK(gt.clusters[1].beta == beta2_expected);

  CHECK(gt.clusters[0].mu[0] == 2.05);
  CHECK(gt.clusters[0].mu[1] == 0.13);
  for (const auto& cl : gt.clusters) CHECK(cl.sigma_b == 2.0);
}

TEST_CASE("truth design row dummy-codes against the first level") {
  const GroundTruth gt = builtin_table1();
  Eigen::Vector2d u(1.5, -0.5);
  Eigen::Vector3d d(1, 0, 1);
  // a1 = level 2, a2 = level 3
  const Eigen::VectorXd x = truth_design_row(gt, u, {2, 3}, d);
  Eigen::VectorXd expected(8);
  expected << 1.5, -0.5, 1, 0, 1, 1, 0, 1;
  CHECK(x == expected);
  // reference levels zero their dummies
  const Eigen::VectorXd x0 = truth_design_row(gt, u, {1, 1}, d);
  CHECK(x0[2] == 0.0);
  CHECK(x0[3] == 0.0);
  CHECK(x0[4] == 0.0);
}

TEST_CASE("generated data matches the mixing proportions") {
  const GroundTruth gt = builtin_table1();
  Rng rng(7);
  const GeneratedData gen = generate(gt, rng);
  REQUIRE(gen.ds.n() == 2000);
  Eigen::Vector3d share = Eigen::Vector3d::Zero();
  for (int i = 0; i < gen.labels.size(); ++i) share[gen.labels[i] - 1] += 1.0;
  share /= gen.labels.size();
  CHECK(std::abs(share[0] - 0.2) <= 0.03);
  CHECK(std::abs(share[1] - 0.3) <= 0.03);
  CHECK(std::abs(share[2] - 0.5) <= 0.03);
}

TEST_CASE("cluster-wise continuous moments match the truth") {
  const GroundTruth gt = builtin_table1();
  Rng rng(11);
  const GeneratedData gen = generate(gt, rng);
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    int n_c = 0;
    for (int i = 0; i < gen.ds.n(); ++i) {
      if (gen.labels[i] != c + 1) continue;
      mean += gen.ds.U.row(i).transpose();
      ++n_c;
    }
    mean /= n_c;
    for (int k = 0; k < 2; ++k) {
      const double sd3 =
          3.0 * std::sqrt(gt.clusters[c].sigma(k, k) / n_c);
      CHECK(std::abs(mean[k] - gt.clusters[c].mu[k]) <= std::max(sd3, 0.15));
    }
    // covariance at 3 standard errors of the sample covariance
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int i = 0; i < gen.ds.n(); ++i) {
      if (gen.labels[i] != c + 1) continue;
      const Eigen::Vector2d r = gen.ds.U.row(i).transpose() - mean;
      cov += r * r.transpose();
    }
    cov /= n_c;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double scale = std::sqrt(gt.clusters[c].sigma(a, a) *
                                       gt.clusters[c].sigma(b, b));
        CHECK(std::abs(cov(a, b) - gt.clusters[c].sigma(a, b)) <=
              3.0 * 2.0 * scale / std::sqrt(static_cast<double>(n_c)));
      }
    }
  }
}

TEST_CASE("every group contains every cluster") {
  const GroundTruth gt = builtin_table1();
  Rng rng(13);
  const GeneratedData gen = generate(gt, rng);
  Eigen::MatrixXi cell = Eigen::MatrixXi::Zero(gt.n_groups, 3);
  for (int i = 0; i < gen.ds.n(); ++i) {
    cell(gen.ds.group[i] - 1, gen.labels[i] - 1)++;
  }
  CHECK(cell.minCoeff() > 0);
}

TEST_CASE("free dichotomous block has half-and-half columns") {
  GroundTruth gt = builtin_table1();
  for (auto& cl : gt.clusters) {
    cl.gamma.setZero();
    cl.nu.setZero();
  }
  Rng rng(17);
  const GeneratedData gen = generate(gt, rng);
  for (int c = 0; c < 3; ++c) {
    int n_c = 0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int i = 0; i < gen.ds.n(); ++i) {
      if (gen.labels[i] != c + 1) continue;
      mean += gen.ds.D.row(i).transpose();
      ++n_c;
    }
    mean /= n_c;
    const double tol = 3.0 * std::sqrt(0.25 / n_c);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(mean[k] - 0.5) <= tol);
  }
}

TEST_CASE("generation is deterministic given the seed") {
  const GroundTruth gt = builtin_table1();
  Rng a(23), b(23);
  const GeneratedData g1 = generate(gt, a);
  const GeneratedData g2 = generate(gt, b);
  CHECK(g1.ds.U == g2.ds.U);
  CHECK(g1.ds.V == g2.ds.V);
  CHECK(g1.ds.D == g2.ds.D);
  CHECK(g1.ds.y == g2.ds.y);
  CHECK(g1.labels == g2.labels);
  CHECK(g1.intercepts == g2.intercepts);
}

TEST_CASE("test split draws fresh intercepts and honors the label law") {
  const GroundTruth gt = builtin_table1();
  Rng rng(29);
  const GeneratedData train = generate(gt, rng);
  const GeneratedData test = generate_test_split(gt, 200, rng);
  CHECK(test.ds.n() == 200);
  CHECK(test.intercepts != train.intercepts);

  Eigen::Vector3d share = Eigen::Vector3d::Zero();
  for (int i = 0; i < 200; ++i) share[test.labels[i] - 1] += 1.0;
  share /= 200.0;
  for (int c = 0; c < 3; ++c) CHECK(std::abs(share[c] - gt.w[c]) <= 0.1);

  // groups come from the training set of groups
  for (int i = 0; i < 200; ++i) {
    CHECK(test.ds.group[i] >= 1);
    CHECK(test.ds.group[i] <= 10);
  }
}

TEST_CASE("labels round-trip through the csv sidecar column") {
  const GroundTruth gt = builtin_table1();
  Rng rng(31);
  const GeneratedData gen = generate(gt, rng);
  // design row count must match the label count
  CHECK(gen.labels.size() == gen.ds.n());
  CHECK(gen.intercepts.rows() == 10);
  CHECK(gen.intercepts.cols() == 3);
}
