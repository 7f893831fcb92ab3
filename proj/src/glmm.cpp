#include "mlcwmd/glmm.hpp"

#include <cmath>
#include <vector>

#include "mlcwmd/errors.hpp"
#include "mlcwmd/kern/kernels.hpp"
#include "mlcwmd/optim.hpp"

namespace mlcwmd {

namespace {
constexpr double k_log_2pi = 1.8378770664093454836;
constexpr double k_log_sigma_lo = -12.0;  // sigma below ~6e-6 is flat terrain
}  // namespace

double wald_p(double estimate, double se) {
  if (!(se > 0.0) || !std::isfinite(se)) return std::nan("");
  const double z = std::abs(estimate / se);
  return std::erfc(z / std::sqrt(2.0));
}

GlmFit fit_logistic_glm(const Eigen::MatrixXd& f, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, const GlmOptions& opts) {
  const int m = static_cast<int>(f.cols());
  const Eigen::Index n = f.rows();
  GlmFit fit;
  fit.beta = Eigen::VectorXd::Zero(m);
  fit.se = Eigen::VectorXd::Constant(m, std::nan(""));
  fit.p_value = Eigen::VectorXd::Constant(m, std::nan(""));

  Eigen::VectorXd eta(n), pi(n);
  double dev_prev = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd info(m, m);

  for (int it = 0; it < opts.max_iterations; ++it) {
    fit.iterations = it + 1;
    eta = f * fit.beta;
    kern::sigmoid_v(eta.data(), pi.data(), static_cast<std::size_t>(n));
    const Eigen::VectorXd wirls =
        (w.array() * pi.array() * (1.0 - pi.array())).cwiseMax(1e-10);
    // working response; the working weight already folds in w
    const Eigen::VectorXd zf =
        eta.array() + w.array() * (y.array() - pi.array()) / wirls.array();
    info = f.transpose() * wirls.asDiagonal() * f;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(
        info + 1e-10 * Eigen::MatrixXd::Identity(m, m));
    fit.beta = ldlt.solve(f.transpose() * (wirls.asDiagonal() * zf));

    const double dev =
        -2.0 * kern::bernoulli_loglik((f * fit.beta).eval().data(), y.data(),
                                      w.data(), static_cast<std::size_t>(n));
    if (std::abs(dev - dev_prev) < opts.dev_tol) {
      fit.converged = true;
      break;
    }
    dev_prev = dev;
  }

  if (fit.beta.cwiseAbs().maxCoeff() > opts.beta_cap) {
    fit.beta = fit.beta.cwiseMax(-opts.beta_cap).cwiseMin(opts.beta_cap);
    fit.separation = true;
    fit.converged = false;
  }

  eta = f * fit.beta;
  fit.loglik = kern::bernoulli_loglik(eta.data(), y.data(), w.data(),
                                      static_cast<std::size_t>(n));
  kern::sigmoid_v(eta.data(), pi.data(), static_cast<std::size_t>(n));
  const Eigen::VectorXd wirls =
      (w.array() * pi.array() * (1.0 - pi.array())).cwiseMax(1e-12);
  info = f.transpose() * wirls.asDiagonal() * f;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (lu.isInvertible()) {
    const Eigen::MatrixXd cov = lu.inverse();
    for (int j = 0; j < m; ++j) {
      fit.se[j] = cov(j, j) > 0 ? std::sqrt(cov(j, j)) : std::nan("");
      fit.p_value[j] = wald_p(fit.beta[j], fit.se[j]);
    }
  }
  return fit;
}

namespace {

// rows with positive weight, compacted and bucketed per group
struct Compacted {
  Eigen::MatrixXd f;
  Eigen::VectorXd y, w;
  std::vector<std::vector<int>> group_rows;  // per group 0..J-1, compact idx
  int n_used = 0;
};

Compacted compact(const Eigen::MatrixXd& f, const Eigen::VectorXi& groups,
                  int n_groups, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& w) {
  Compacted c;
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    if (w[i] > 0.0) keep.push_back(static_cast<int>(i));
  }
  c.n_used = static_cast<int>(keep.size());
  c.f.resize(c.n_used, f.cols());
  c.y.resize(c.n_used);
  c.w.resize(c.n_used);
  c.group_rows.resize(static_cast<std::size_t>(n_groups));
  for (int k = 0; k < c.n_used; ++k) {
    const int i = keep[static_cast<std::size_t>(k)];
    c.f.row(k) = f.row(i);
    c.y[k] = y[i];
    c.w[k] = w[i];
    const int g = groups[i];
    if (g >= 1 && g <= n_groups) {
      c.group_rows[static_cast<std::size_t>(g - 1)].push_back(k);
    }
  }
  return c;
}

struct GroupState {
  double b = 0.0;      // current mode
  double h = 1.0;      // curvature -g'' at the mode
  double grad_b = 0.0; // |g'| at exit, diagnostics
};

// Newton solve for the mode of g(b); g is strictly concave in b.
void solve_mode(const Compacted& c, const Eigen::VectorXd& eta0, int g,
                double inv_s2, double tol, int max_iter, GroupState& st) {
  const auto& rows = c.group_rows[static_cast<std::size_t>(g)];
  double b = st.b;
  for (int it = 0; it < max_iter; ++it) {
    double score = -b * inv_s2;
    double curv = inv_s2;
    for (int k : rows) {
      const double pi = kern::sigmoid(eta0[k] + b);
      score += c.w[k] * (c.y[k] - pi);
      curv += c.w[k] * pi * (1.0 - pi);
    }
    st.h = curv;
    st.grad_b = score;
    if (std::abs(score) <= tol) break;
    double step = score / curv;
    if (std::abs(step) > 10.0) step = step > 0 ? 10.0 : -10.0;
    b += step;
  }
  st.b = b;
}

struct LaplaceEval {
  double loglik = 0.0;
  Eigen::VectorXd grad;  // over [beta_free..., s]; empty unless requested
};

// Laplace log-likelihood and analytic gradient; mode solutions are kept
// warm across evaluations in `states`.
LaplaceEval laplace_eval(const Compacted& c, const Eigen::VectorXd& beta,
                         double s, std::vector<GroupState>& states,
                         bool want_grad, double inner_tol, int inner_max) {
  const double s_eff = std::max(s, k_log_sigma_lo);
  const double sigma2 = std::exp(2.0 * s_eff);
  const double inv_s2 = 1.0 / sigma2;
  const int m = static_cast<int>(beta.size());
  const int n_groups = static_cast<int>(states.size());

  const Eigen::VectorXd eta0 = c.f * beta;
  LaplaceEval out;
  if (want_grad) out.grad = Eigen::VectorXd::Zero(m + 1);

  for (int g = 0; g < n_groups; ++g) {
    const auto& rows = c.group_rows[static_cast<std::size_t>(g)];
    if (rows.empty()) continue;  // exact zero contribution
    GroupState& st = states[static_cast<std::size_t>(g)];
    solve_mode(c, eta0, g, inv_s2, inner_tol, inner_max, st);
    const double b = st.b;

    double data_ll = 0.0;
    double sum_w_pi = 0.0;   // sum w pi(1-pi)
    double sum_t = 0.0;      // sum w pi(1-pi)(1-2pi)
    Eigen::VectorXd d_beta = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd dh_beta = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd d2g_b_beta = Eigen::VectorXd::Zero(m);
    for (int k : rows) {
      const double eta = eta0[k] + b;
      const double pi = kern::sigmoid(eta);
      data_ll += c.w[k] * (c.y[k] * eta - kern::log1pexp(eta));
      const double wp = c.w[k] * pi * (1.0 - pi);
      sum_w_pi += wp;
      if (want_grad) {
        const double r = c.w[k] * (c.y[k] - pi);
        const double t = wp * (1.0 - 2.0 * pi);
        sum_t += t;
        d_beta += r * c.f.row(k).transpose();
        dh_beta += t * c.f.row(k).transpose();
        d2g_b_beta -= wp * c.f.row(k).transpose();
      }
    }
    const double h = sum_w_pi + inv_s2;
    const double g_at_mode = data_ll - 0.5 * b * b * inv_s2 -
                             0.5 * (k_log_2pi + 2.0 * s_eff);
    out.loglik += g_at_mode + 0.5 * k_log_2pi - 0.5 * std::log(h);

    if (want_grad) {
      const double dh_b = sum_t;           // dH/db
      const double dh_s = -2.0 * inv_s2;   // dH/ds
      const double d2g_b_s = 2.0 * b * inv_s2;
      const Eigen::VectorXd db_dbeta = d2g_b_beta / h;
      const double db_ds = d2g_b_s / h;
      out.grad.head(m) +=
          d_beta - (dh_b * db_dbeta + dh_beta) / (2.0 * h);
      const double dg_s = b * b * inv_s2 - 1.0;
      out.grad[m] += dg_s - (dh_b * db_ds + dh_s) / (2.0 * h);
    }
  }
  if (want_grad && s < k_log_sigma_lo) out.grad[m] = 0.0;  // flat below floor
  return out;
}

}  // namespace

double mixed_marginal_loglik(const Eigen::MatrixXd& f,
                             const Eigen::VectorXi& groups, int n_groups,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             const Eigen::VectorXd& beta, double sigma_b) {
  const Compacted c = compact(f, groups, n_groups, y, w);
  std::vector<GroupState> states(static_cast<std::size_t>(n_groups));
  return laplace_eval(c, beta, std::log(std::max(sigma_b, 1e-12)), states,
                      false, 1e-11, 100)
      .loglik;
}

MixedFit fit_logistic_mixed(const Eigen::MatrixXd& f,
                            const Eigen::VectorXi& groups, int n_groups,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                            const MixedOptions& opts) {
  const int m = static_cast<int>(f.cols());
  Compacted c = compact(f, groups, n_groups, y, w);

  bool saw0 = false, saw1 = false;
  for (int k = 0; k < c.n_used; ++k) (c.y[k] > 0.5 ? saw1 : saw0) = true;
  if (!saw0 || !saw1) {
    throw FitError("mixed logistic fit: weighted rows contain a single "
                   "response class");
  }
  // the fit depends on weights only through their ratios; normalizing by
  // the maximum makes it exactly invariant to positive rescaling
  c.w /= c.w.maxCoeff();

  // identifiable columns among the weighted rows
  Eigen::MatrixXd fw = c.w.array().sqrt().matrix().asDiagonal() * c.f;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fw);
  qr.setThreshold(1e-9);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> free_cols;
  {
    const auto perm = qr.colsPermutation().indices();
    std::vector<int> picked(perm.size(), 0);
    for (int j = 0; j < rank; ++j) picked[perm[j]] = 1;
    for (int j = 0; j < m; ++j) {
      if (picked[j]) free_cols.push_back(j);
    }
  }
  const int mf = static_cast<int>(free_cols.size());
  Eigen::MatrixXd f_free(c.n_used, mf);
  for (int j = 0; j < mf; ++j) f_free.col(j) = c.f.col(free_cols[j]);

  Compacted cf = c;
  cf.f = f_free;

  // starting point: warm start when offered, otherwise a quick GLM pass
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(mf);
  if (opts.beta_init && opts.beta_init->size() == m) {
    for (int j = 0; j < mf; ++j) beta0[j] = (*opts.beta_init)[free_cols[j]];
  } else {
    GlmOptions gopts;
    gopts.max_iterations = 25;
    const GlmFit g0 = fit_logistic_glm(f_free, cf.y, cf.w, gopts);
    beta0 = g0.beta;
  }
  double s0 = std::log(std::clamp(opts.sigma_init, 1e-3, 40.0));

  std::vector<GroupState> states(static_cast<std::size_t>(n_groups));
  // optimize per-unit-weight so the gradient tolerance is sample-size free
  const double w_total = std::max(c.w.sum(), 1.0);
  auto objective = [&](const Eigen::VectorXd& theta,
                       Eigen::VectorXd* grad) -> double {
    if (theta[mf] > opts.log_sigma_hi) {
      return std::numeric_limits<double>::infinity();
    }
    const LaplaceEval ev =
        laplace_eval(cf, theta.head(mf), theta[mf], states, grad != nullptr,
                     opts.inner_tol, opts.inner_max);
    if (grad) *grad = -ev.grad / w_total;
    return -ev.loglik / w_total;
  };

  Eigen::VectorXd theta0(mf + 1);
  theta0 << beta0, s0;
  BfgsOptions bopts;
  bopts.grad_tol = opts.grad_tol;
  bopts.max_iterations = opts.max_outer;
  BfgsResult r = minimize_bfgs(objective, theta0, bopts);

  MixedFit fit;
  fit.n_used = c.n_used;
  fit.outer_iterations = r.iterations;
  fit.converged = r.converged;
  fit.beta = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < mf; ++j) fit.beta[free_cols[j]] = r.x[j];
  double s_hat = std::clamp(r.x[mf], k_log_sigma_lo, opts.log_sigma_hi);
  fit.sigma_b = std::exp(s_hat);

  if (fit.beta.cwiseAbs().maxCoeff() > opts.beta_cap) {
    fit.separation = true;
    fit.converged = false;
    fit.beta = fit.beta.cwiseMax(-opts.beta_cap).cwiseMin(opts.beta_cap);
    for (int j = 0; j < mf; ++j) r.x[j] = fit.beta[free_cols[j]];
  }

  // final modes and conditional sds at the reported parameters
  const LaplaceEval fin = laplace_eval(cf, r.x.head(mf), s_hat, states, false,
                                       opts.inner_tol, opts.inner_max);
  fit.loglik = fin.loglik;
  fit.b_hat = Eigen::VectorXd::Zero(n_groups);
  fit.b_sd = Eigen::VectorXd::Constant(n_groups, fit.sigma_b);
  for (int g = 0; g < n_groups; ++g) {
    if (c.group_rows[static_cast<std::size_t>(g)].empty()) continue;
    fit.b_hat[g] = states[static_cast<std::size_t>(g)].b;
    fit.b_sd[g] = 1.0 / std::sqrt(states[static_cast<std::size_t>(g)].h);
  }

  fit.se = Eigen::VectorXd::Constant(m, std::nan(""));
  fit.p_value = Eigen::VectorXd::Constant(m, std::nan(""));
  if (opts.compute_se && !fit.separation) {
    auto nll = [&](const Eigen::VectorXd& theta) {
      std::vector<GroupState> st(states);  // keep outer modes untouched
      return -laplace_eval(cf, theta.head(mf), theta[mf], st, false,
                           opts.inner_tol, opts.inner_max)
                  .loglik;
    };
    const Eigen::MatrixXd hess = fd_hessian(nll, r.x);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(hess);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd cov = lu.inverse();
      for (int j = 0; j < mf; ++j) {
        const double v = cov(j, j);
        fit.se[free_cols[j]] = v > 0 ? std::sqrt(v) : std::nan("");
        fit.p_value[free_cols[j]] =
            wald_p(fit.beta[free_cols[j]], fit.se[free_cols[j]]);
      }
    }
  }
  return fit;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> mixed_wald_stats(
    const Eigen::MatrixXd& f, const Eigen::VectorXi& groups, int n_groups,
    const Eigen::VectorXd& y, const Eigen::VectorXd& w,
    const Eigen::VectorXd& beta, double sigma_b) {
  const int m = static_cast<int>(f.cols());
  Eigen::VectorXd se = Eigen::VectorXd::Constant(m, std::nan(""));
  Eigen::VectorXd pv = Eigen::VectorXd::Constant(m, std::nan(""));

  Compacted c = compact(f, groups, n_groups, y, w);
  c.w /= c.w.maxCoeff();
  Eigen::MatrixXd fw = c.w.array().sqrt().matrix().asDiagonal() * c.f;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fw);
  qr.setThreshold(1e-9);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> free_cols;
  {
    const auto perm = qr.colsPermutation().indices();
    std::vector<int> picked(perm.size(), 0);
    for (int j = 0; j < rank; ++j) picked[perm[j]] = 1;
    for (int j = 0; j < m; ++j) {
      if (picked[j]) free_cols.push_back(j);
    }
  }
  const int mf = static_cast<int>(free_cols.size());
  Compacted cf = c;
  cf.f.resize(c.n_used, mf);
  for (int j = 0; j < mf; ++j) cf.f.col(j) = c.f.col(free_cols[j]);

  Eigen::VectorXd theta(mf + 1);
  for (int j = 0; j < mf; ++j) theta[j] = beta[free_cols[j]];
  theta[mf] = std::log(std::max(sigma_b, 1e-6));

  auto nll = [&](const Eigen::VectorXd& th) {
    std::vector<GroupState> st(static_cast<std::size_t>(n_groups));
    return -laplace_eval(cf, th.head(mf), th[mf], st, false, 1e-11, 100)
                .loglik;
  };
  const Eigen::MatrixXd hess = fd_hessian(nll, theta);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(hess);
  if (lu.isInvertible()) {
    const Eigen::MatrixXd cov = lu.inverse();
    for (int j = 0; j < mf; ++j) {
      const double v = cov(j, j);
      se[free_cols[j]] = v > 0 ? std::sqrt(v) : std::nan("");
      pv[free_cols[j]] = wald_p(beta[free_cols[j]], se[free_cols[j]]);
    }
  }
  return {se, pv};
}

Eigen::VectorXd marginal_loglik_rows(const Eigen::VectorXd& beta,
                                     double sigma_b, const Eigen::MatrixXd& f,
                                     const Eigen::VectorXi& y, int nodes) {
  const auto [t, wq] = gauss_hermite(nodes);
  const Eigen::Index n = f.rows();
  const Eigen::VectorXd eta0 = f * beta;
  Eigen::VectorXd out(n);
  const double scale = std::sqrt(2.0) * sigma_b;
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double eta = eta0[i] + scale * t[k];
      const double p = kern::sigmoid(eta);
      acc += wq[k] * (y[i] == 1 ? p : 1.0 - p);
    }
    out[i] = std::log(acc * inv_sqrt_pi);
  }
  return out;
}

Eigen::VectorXd conditional_loglik(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& b_hat,
                                   const Eigen::MatrixXd& f,
                                   const Eigen::VectorXi& groups,
                                   const Eigen::VectorXi& y) {
  const Eigen::Index n = f.rows();
  Eigen::VectorXd eta = f * beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int g = groups[i];
    if (g >= 1 && g <= b_hat.size()) eta[i] += b_hat[g - 1];
  }
  Eigen::VectorXd sp(n);
  kern::log1pexp_v(eta.data(), sp.data(), static_cast<std::size_t>(n));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = (y[i] == 1 ? eta[i] : 0.0) - sp[i];
  }
  return out;
}

}  // namespace mlcwmd
