#include "mlcwmd/dgp.hpp"

#include <cmath>

#include "mlcwmd/errors.hpp"
#include "mlcwmd/kern/kernels.hpp"

namespace mlcwmd {

int GroundTruth::design_cols() const {
  int m = p() + h();
  for (int k : v_levels) m += k - 1;
  return m;
}

void GroundTruth::check() const {
  if (clusters.empty()) throw FitError("ground truth has no clusters");
  if (w.size() != n_clusters()) throw FitError("ground truth w size mismatch");
  if (std::abs(w.sum() - 1.0) > 1e-9 || w.minCoeff() <= 0.0) {
    throw FitError("ground truth mixture weights must be positive and sum to 1");
  }
  if (n_groups < 1 || n_per_group < 1) {
    throw FitError("ground truth needs n_groups >= 1 and n_per_group >= 1");
  }
  const int m = design_cols();
  for (const auto& cl : clusters) {
    if (static_cast<int>(cl.lambda.size()) != q()) {
      throw FitError("ground truth lambda block count mismatch");
    }
    for (int r = 0; r < q(); ++r) {
      if (cl.lambda[r].size() != v_levels[r]) {
        throw FitError("ground truth lambda length mismatch");
      }
      if (std::abs(cl.lambda[r].sum() - 1.0) > 1e-9) {
        throw FitError("ground truth lambda must sum to 1");
      }
    }
    if (cl.beta.size() != m) {
      throw FitError("ground truth beta length " +
                     std::to_string(cl.beta.size()) + " != design columns " +
                     std::to_string(m));
    }
    if (cl.sigma_b < 0.0) throw FitError("ground truth sigma_b < 0");
  }
}

GroundTruth builtin_table1() {
  GroundTruth gt;
  gt.w = Eigen::Vector3d(0.2, 0.3, 0.5);
  gt.n_groups = 10;
  gt.n_per_group = 200;
  gt.d_domain = IsingDomain::zero_one;
  gt.v_levels = {2, 3};  // a1 two categories, a2 three (design order)

  auto gamma3 = [](double g12, double g13, double g23) {
    Eigen::Matrix3d g;
    g << 0, g12, g13, g12, 0, g23, g13, g23, 0;
    return g;
  };

  ClusterTruth c1;
  c1.mu = Eigen::Vector2d(2.05, 0.13);
  c1.sigma = (Eigen::Matrix2d() << 0.7, 0.5, 0.5, 3.0).finished();
  c1.lambda = {Eigen::Vector2d(0.51, 0.49), Eigen::Vector3d(0.75, 0.18, 0.07)};
  c1.gamma = gamma3(0.21, -1.1, 0.0);
  c1.nu = Eigen::Vector3d(0.11, 0.38, -0.49);
  c1.beta.resize(8);
  c1.beta << -0.52, 0.08, 1.31, 0.22, 5.33, 2.75, 2.29, 0.93;
  c1.sigma_b = 2.0;

  ClusterTruth c2;
  c2.mu = Eigen::Vector2d(5.06, 4.84);
  c2.sigma = (Eigen::Matrix2d() << 2.0, -1.0, -1.0, 3.0).finished();
  c2.lambda = {Eigen::Vector2d(0.49, 0.51), Eigen::Vector3d(0.07, 0.75, 0.18)};
  c2.gamma = gamma3(-0.73, 0.83, 0.0);
  c2.nu = Eigen::Vector3d(-0.15, 0.88, -0.18);
  c2.beta.resize(8);
  c2.beta << -0.07, 0.79, -0.46, 0.25, -3.89, -0.63, 0.63, -1.51;
  c2.sigma_b = 2.0;

  ClusterTruth c3;
  c3.mu = Eigen::Vector2d(4.22, -4.51);
  c3.sigma = (Eigen::Matrix2d() << 3.0, 1.0, 1.0, 2.0).finished();
  c3.lambda = {Eigen::Vector2d(0.47, 0.53), Eigen::Vector3d(0.30, 0.51, 0.19)};
  c3.gamma = gamma3(-4.15, 2.11, 1.14);
  c3.nu = Eigen::Vector3d(0.73, -0.23, 0.01);
  c3.beta.resize(8);
  c3.beta << -0.42, -0.31, -1.33, -0.60, -4.18, 4.89, 3.34, -0.46;
  c3.sigma_b = 2.0;

  gt.clusters = {c1, c2, c3};
  gt.check();
  return gt;
}

Eigen::VectorXd truth_design_row(const GroundTruth& gt,
                                 const Eigen::VectorXd& u,
                                 const std::vector<int>& v,
                                 const Eigen::VectorXd& d) {
  Eigen::VectorXd x(gt.design_cols());
  int idx = 0;
  for (int k = 0; k < gt.p(); ++k) x[idx++] = u[k];
  for (int r = 0; r < gt.q(); ++r) {
    for (int level = 2; level <= gt.v_levels[r]; ++level) {
      x[idx++] = v[static_cast<std::size_t>(r)] == level ? 1.0 : 0.0;
    }
  }
  for (int k = 0; k < gt.h(); ++k) x[idx++] = d[k];
  return x;
}

namespace {

struct ClusterSamplers {
  Eigen::MatrixXd chol;  // lower factor of sigma
  Eigen::VectorXd state_probs;
  IsingModel ising;
};

std::vector<ClusterSamplers> make_samplers(const GroundTruth& gt) {
  std::vector<ClusterSamplers> s;
  for (const auto& cl : gt.clusters) {
    ClusterSamplers cs;
    Eigen::LLT<Eigen::MatrixXd> llt(cl.sigma);
    if (llt.info() != Eigen::Success) {
      throw FitError("ground truth covariance not positive definite");
    }
    cs.chol = llt.matrixL();
    cs.ising = IsingModel(cl.nu, cl.gamma, gt.d_domain);
    cs.state_probs = cs.ising.state_probabilities();
    s.push_back(std::move(cs));
  }
  return s;
}

struct RowDraw {
  Eigen::VectorXd u;
  std::vector<int> v;
  Eigen::VectorXd d;
  int y;
};

RowDraw draw_row(const GroundTruth& gt, const std::vector<ClusterSamplers>& s,
                 int cluster, double b, Rng& rng) {
  const auto& cl = gt.clusters[static_cast<std::size_t>(cluster)];
  const auto& cs = s[static_cast<std::size_t>(cluster)];
  RowDraw row;

  Eigen::VectorXd z(gt.p());
  for (int k = 0; k < gt.p(); ++k) z[k] = rng.normal();
  row.u = cl.mu + cs.chol * z;

  row.v.resize(static_cast<std::size_t>(gt.q()));
  for (int r = 0; r < gt.q(); ++r) {
    row.v[static_cast<std::size_t>(r)] = rng.categorical(cl.lambda[r]) + 1;
  }

  row.d = cs.ising.state_vector(rng.categorical(cs.state_probs));

  const Eigen::VectorXd x = truth_design_row(gt, row.u, row.v, row.d);
  const double eta = cl.beta.dot(x) + b;
  row.y = rng.uniform() < kern::sigmoid(eta) ? 1 : 0;
  return row;
}

Dataset assemble(const GroundTruth& gt, const std::vector<RowDraw>& rows,
                 const std::vector<int>& groups) {
  const int n = static_cast<int>(rows.size());
  Dataset ds;
  ds.d_domain = gt.d_domain;
  ds.y_name = "y";
  ds.group_name = "group";
  for (int k = 0; k < gt.p(); ++k) ds.u_names.push_back("x" + std::to_string(k + 1));
  for (int r = 0; r < gt.q(); ++r) ds.v_names.push_back("a" + std::to_string(r + 1));
  for (int k = 0; k < gt.h(); ++k) ds.d_names.push_back("d" + std::to_string(k + 1));

  ds.y.resize(n);
  ds.group.resize(n);
  ds.U.resize(n, gt.p());
  ds.V.resize(n, gt.q());
  ds.D.resize(n, gt.h());
  ds.X_extra.resize(n, 0);
  ds.v_codecs.resize(static_cast<std::size_t>(gt.q()));

  // first-appearance encodings, same rule the CSV loader applies
  std::vector<int> group_seen;
  std::vector<std::vector<int>> v_seen(static_cast<std::size_t>(gt.q()));
  auto encode = [](std::vector<int>& seen, int value) {
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i] == value) return static_cast<int>(i) + 1;
    }
    seen.push_back(value);
    return static_cast<int>(seen.size());
  };

  for (int i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    ds.y[i] = row.y;
    const int gid = encode(group_seen, groups[static_cast<std::size_t>(i)]);
    if (gid > static_cast<int>(ds.group_levels.size())) {
      ds.group_levels.push_back(std::to_string(groups[static_cast<std::size_t>(i)]));
    }
    ds.group[i] = gid;
    for (int k = 0; k < gt.p(); ++k) ds.U(i, k) = row.u[k];
    for (int r = 0; r < gt.q(); ++r) {
      const int code = encode(v_seen[static_cast<std::size_t>(r)],
                              row.v[static_cast<std::size_t>(r)]);
      if (code > ds.v_codecs[static_cast<std::size_t>(r)].k()) {
        ds.v_codecs[static_cast<std::size_t>(r)].levels.push_back(
            std::to_string(row.v[static_cast<std::size_t>(r)]));
      }
      ds.V(i, r) = code;
    }
    for (int k = 0; k < gt.h(); ++k) ds.D(i, k) = row.d[k];
  }
  return ds;
}

}  // namespace

GeneratedData generate(const GroundTruth& gt, Rng& rng) {
  gt.check();
  const int C = gt.n_clusters();
  const int J = gt.n_groups;
  const int nj = gt.n_per_group;
  const std::vector<ClusterSamplers> samplers = make_samplers(gt);

  GeneratedData out;
  out.intercepts.resize(J, C);
  for (int j = 0; j < J; ++j) {
    for (int c = 0; c < C; ++c) {
      out.intercepts(j, c) =
          gt.clusters[static_cast<std::size_t>(c)].sigma_b * rng.normal();
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(J * nj));
  for (int j = 0; j < J; ++j) {
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      std::vector<int> counts(static_cast<std::size_t>(C), 0);
      for (int i = 0; i < nj; ++i) {
        const int c = rng.categorical(gt.w);
        labels[static_cast<std::size_t>(j * nj + i)] = c;
        ++counts[static_cast<std::size_t>(c)];
      }
      ok = true;
      for (int c = 0; c < C; ++c) ok = ok && counts[static_cast<std::size_t>(c)] > 0;
    }
    if (!ok) {
      throw FitError("could not place every cluster in group " +
                     std::to_string(j + 1) + " within 100 attempts");
    }
  }

  std::vector<RowDraw> rows;
  std::vector<int> groups;
  rows.reserve(labels.size());
  groups.reserve(labels.size());
  out.labels.resize(static_cast<long>(labels.size()));
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < nj; ++i) {
      const int c = labels[static_cast<std::size_t>(j * nj + i)];
      rows.push_back(draw_row(gt, samplers, c, out.intercepts(j, c), rng));
      groups.push_back(j + 1);
      out.labels[j * nj + i] = c + 1;
    }
  }
  out.ds = assemble(gt, rows, groups);
  return out;
}

GeneratedData generate_test_split(const GroundTruth& gt, int n_test, Rng& rng) {
  gt.check();
  const int C = gt.n_clusters();
  const int J = gt.n_groups;
  const std::vector<ClusterSamplers> samplers = make_samplers(gt);

  GeneratedData out;
  out.intercepts.resize(J, C);
  for (int j = 0; j < J; ++j) {
    for (int c = 0; c < C; ++c) {
      out.intercepts(j, c) =
          gt.clusters[static_cast<std::size_t>(c)].sigma_b * rng.normal();
    }
  }

  std::vector<RowDraw> rows;
  std::vector<int> groups;
  out.labels.resize(n_test);
  for (int i = 0; i < n_test; ++i) {
    const int j = rng.uniform_int(1, J);
    const int c = rng.categorical(gt.w);
    rows.push_back(draw_row(gt, samplers, c, out.intercepts(j - 1, c), rng));
    groups.push_back(j);
    out.labels[i] = c + 1;
  }
  out.ds = assemble(gt, rows, groups);
  return out;
}

}  // namespace mlcwmd
