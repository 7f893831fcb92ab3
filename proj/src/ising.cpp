#include "mlcwmd/ising.hpp"

#include <cmath>

#include "mlcwmd/errors.hpp"
#include "mlcwmd/kern/kernels.hpp"
#include "mlcwmd/optim.hpp"

namespace mlcwmd {

std::string to_string(IsingDomain d) {
  return d == IsingDomain::zero_one ? "01" : "pm1";
}

IsingDomain ising_domain_from_string(const std::string& s) {
  if (s == "01") return IsingDomain::zero_one;
  if (s == "pm1") return IsingDomain::plus_minus;
  throw DataError("unknown ising domain '" + s + "' (expected 01 or pm1)");
}

IsingModel::IsingModel(Eigen::VectorXd nu, Eigen::MatrixXd gamma,
                       IsingDomain domain, int h_max)
    : nu_(std::move(nu)), gamma_(std::move(gamma)), domain_(domain) {
  const int h = static_cast<int>(nu_.size());
  if (gamma_.rows() != h || gamma_.cols() != h) {
    throw FitError("ising interaction matrix dimension mismatch");
  }
  if (h == 0) {
    exact_ = true;  // the empty block has one state with probability 1
    return;
  }
  if (!gamma_.isApprox(gamma_.transpose(), 1e-10)) {
    throw FitError("ising interaction matrix not symmetric");
  }
  if (gamma_.diagonal().cwiseAbs().maxCoeff() > 1e-12) {
    throw FitError("ising interaction matrix has nonzero diagonal");
  }
  gamma_.diagonal().setZero();

  if (h <= h_max) {
    // log-sum-exp over all 2^h states
    double emax = -std::numeric_limits<double>::infinity();
    const long n_states = 1L << h;
    std::vector<double> energies(static_cast<std::size_t>(n_states));
    for (long s = 0; s < n_states; ++s) {
      energies[static_cast<std::size_t>(s)] = energy(state_vector_impl(s));
      emax = std::max(emax, energies[static_cast<std::size_t>(s)]);
    }
    double acc = 0.0;
    for (double e : energies) acc += std::exp(e - emax);
    log_s_ = emax + std::log(acc);
    exact_ = true;
  }
}

Eigen::VectorXd IsingModel::state_vector_impl(long index) const {
  Eigen::VectorXd d(h());
  for (int l = 0; l < h(); ++l) {
    d[l] = (index >> l) & 1 ? hi() : lo();
  }
  return d;
}

Eigen::VectorXd IsingModel::state_vector(int index) const {
  return state_vector_impl(index);
}

double IsingModel::log_normalizer() const {
  if (!exact_) {
    throw CapabilityError(
        "ising normalizer needs h <= " + std::to_string(default_h_max) +
        " for exact enumeration; use the pseudo-likelihood operations");
  }
  return log_s_;
}

double IsingModel::energy(const Eigen::VectorXd& d) const {
  return 0.5 * d.dot(gamma_ * d) + d.dot(nu_);
}

double IsingModel::logpmf(const Eigen::VectorXd& d) const {
  for (int l = 0; l < h(); ++l) {
    if (d[l] != lo() && d[l] != hi()) {
      throw DataError("ising state entry " + std::to_string(d[l]) +
                      " outside the " + to_string(domain_) + " domain");
    }
  }
  return energy(d) - log_normalizer();
}

Eigen::VectorXd IsingModel::logpmf_rows(const Eigen::MatrixXd& d_rows) const {
  const double ls = log_normalizer();
  const Eigen::MatrixXd g_rows = d_rows * gamma_;  // diag 0 drops self-terms
  return (0.5 * (g_rows.array() * d_rows.array()).rowwise().sum() +
          (d_rows * nu_).array() - ls)
      .matrix();
}

double IsingModel::conditional(const Eigen::VectorXd& d, int l) const {
  if (l < 0 || l >= h()) throw std::out_of_range("ising variable index");
  const double eta = gamma_.row(l).dot(d) + nu_[l];
  if (domain_ == IsingDomain::zero_one) {
    return d[l] == 1.0 ? kern::sigmoid(eta) : kern::sigmoid(-eta);
  }
  return kern::sigmoid(2.0 * d[l] * eta);
}

Eigen::VectorXd IsingModel::state_probabilities() const {
  const double ls = log_normalizer();
  const long n_states = 1L << h();
  Eigen::VectorXd probs(n_states);
  for (long s = 0; s < n_states; ++s) {
    probs[s] = std::exp(energy(state_vector_impl(s)) - ls);
  }
  return probs;
}

double ising_log_normalizer(const IsingModel& m) { return m.log_normalizer(); }

namespace {

// Per-row linear fields eta_{il} = (D Gamma)_{il} + nu_l; gamma's zero
// diagonal removes the self term.
Eigen::MatrixXd fields(const Eigen::MatrixXd& d_rows, const IsingModel& m) {
  return (d_rows * m.gamma()).rowwise() + m.nu().transpose();
}

}  // namespace

double ising_pseudo_loglik(const Eigen::MatrixXd& d_rows,
                           const Eigen::VectorXd& weights,
                           const IsingModel& m) {
  const Eigen::Index n = d_rows.rows();
  const int h = m.h();
  if (n == 0) return 0.0;
  const Eigen::MatrixXd eta = fields(d_rows, m);

  // log P(d_l | rest) = log sigmoid(a), a = (2d-1)eta in {0,1},
  // a = 2 d eta in {-1,1}; log sigmoid(a) = -log1pexp(-a)
  Eigen::MatrixXd a(n, h);
  if (m.domain() == IsingDomain::zero_one) {
    a = ((2.0 * d_rows.array() - 1.0) * eta.array()).matrix();
  } else {
    a = (2.0 * d_rows.array() * eta.array()).matrix();
  }
  Eigen::MatrixXd neg_sp(n, h);
  kern::log1pexp_v((-a).eval().data(), neg_sp.data(),
                   static_cast<std::size_t>(n) * h);
  return -(neg_sp.array().rowwise().sum() * weights.array()).sum();
}

Eigen::VectorXd ising_pseudo_grad(const Eigen::MatrixXd& d_rows,
                                  const Eigen::VectorXd& weights,
                                  const IsingModel& m) {
  const Eigen::Index n = d_rows.rows();
  const int h = m.h();
  const Eigen::MatrixXd eta = fields(d_rows, m);

  // residual r_{il} = d_il - E[d_l | rest]
  Eigen::MatrixXd mean(n, h);
  if (m.domain() == IsingDomain::zero_one) {
    kern::sigmoid_v(eta.data(), mean.data(), static_cast<std::size_t>(n) * h);
  } else {
    mean = eta.array().tanh().matrix();
  }
  const Eigen::MatrixXd resid =
      (d_rows - mean).array().colwise() * weights.array();

  Eigen::VectorXd grad(h + h * (h - 1) / 2);
  grad.head(h) = resid.colwise().sum();
  // d/d gamma_{lk} = sum_i w_i (r_il d_ik + r_ik d_il)
  const Eigen::MatrixXd cross = resid.transpose() * d_rows;
  int idx = h;
  for (int l = 0; l < h; ++l) {
    for (int k = l + 1; k < h; ++k) {
      grad[idx++] = cross(l, k) + cross(k, l);
    }
  }
  return grad;
}

namespace {

IsingModel unpack(const Eigen::VectorXd& theta, int h, IsingDomain domain,
                  const std::vector<bool>& frozen,
                  const Eigen::VectorXd& frozen_nu) {
  Eigen::VectorXd nu(h);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(h, h);
  for (int l = 0; l < h; ++l) nu[l] = frozen[l] ? frozen_nu[l] : theta[l];
  int idx = h;
  for (int l = 0; l < h; ++l) {
    for (int k = l + 1; k < h; ++k) {
      const double g = (frozen[l] || frozen[k]) ? 0.0 : theta[idx];
      gamma(l, k) = gamma(k, l) = g;
      ++idx;
    }
  }
  return IsingModel(nu, gamma, domain);
}

}  // namespace

IsingFitResult ising_fit_pseudo(const Eigen::MatrixXd& d_rows,
                                const Eigen::VectorXd& weights,
                                IsingDomain domain, const IsingModel* init,
                                const IsingFitOptions& opts) {
  const int h = static_cast<int>(d_rows.cols());
  const Eigen::Index n = d_rows.rows();
  int effective = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] > 0.0) ++effective;
  }
  if (effective < h + 1) {
    throw FitError("ising fit needs at least h+1 weighted rows, got " +
                   std::to_string(effective));
  }

  // a variable constant across the weighted rows cannot inform its
  // interactions; freeze it and clamp its threshold toward the observed state
  const double lo = domain == IsingDomain::zero_one ? 0.0 : -1.0;
  std::vector<bool> frozen(h, false);
  Eigen::VectorXd frozen_nu = Eigen::VectorXd::Zero(h);
  IsingFitResult out;
  for (int l = 0; l < h; ++l) {
    bool saw_lo = false, saw_hi = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights[i] <= 0.0) continue;
      (d_rows(i, l) == lo ? saw_lo : saw_hi) = true;
      if (saw_lo && saw_hi) break;
    }
    if (!(saw_lo && saw_hi)) {
      frozen[l] = true;
      frozen_nu[l] = saw_hi ? opts.nu_cap : -opts.nu_cap;
      out.frozen_variables.push_back(l);
    }
  }
  out.any_frozen = !out.frozen_variables.empty();

  const int n_theta = h + h * (h - 1) / 2;
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(n_theta);
  if (init && init->h() == h && init->domain() == domain) {
    theta0.head(h) = init->nu();
    int idx = h;
    for (int l = 0; l < h; ++l) {
      for (int k = l + 1; k < h; ++k) theta0[idx++] = init->gamma()(l, k);
    }
  }

  // optimize the weight-normalized objective so the gradient tolerance
  // means the same thing at any sample size; the maximizer is unchanged
  const double w_total = std::max(weights.sum(), 1.0);
  auto objective = [&](const Eigen::VectorXd& theta,
                       Eigen::VectorXd* grad) -> double {
    const IsingModel m = unpack(theta, h, domain, frozen, frozen_nu);
    if (grad) {
      Eigen::VectorXd full = ising_pseudo_grad(d_rows, weights, m);
      // zero out frozen coordinates so the optimizer leaves them alone
      for (int l = 0; l < h; ++l) {
        if (frozen[l]) full[l] = 0.0;
      }
      int idx = h;
      for (int l = 0; l < h; ++l) {
        for (int k = l + 1; k < h; ++k, ++idx) {
          if (frozen[l] || frozen[k]) full[idx] = 0.0;
        }
      }
      *grad = -full / w_total;
    }
    return -ising_pseudo_loglik(d_rows, weights, m) / w_total;
  };

  BfgsOptions bopts;
  bopts.max_iterations = opts.max_iterations;
  bopts.grad_tol = opts.grad_tol;
  const BfgsResult r = minimize_bfgs(objective, theta0, bopts);

  out.model = unpack(r.x, h, domain, frozen, frozen_nu);
  out.converged = r.converged;
  out.iterations = r.iterations;
  return out;
}

Eigen::MatrixXd ising_sample(const IsingModel& m, int n, Rng& rng) {
  const Eigen::VectorXd probs = m.state_probabilities();
  Eigen::MatrixXd rows(n, m.h());
  for (int i = 0; i < n; ++i) {
    rows.row(i) = m.state_vector(rng.categorical(probs));
  }
  return rows;
}

IsingModel ising_convert_domain(const IsingModel& m, IsingDomain target) {
  if (target == m.domain()) return m;
  const int h = m.h();
  const Eigen::VectorXd row_sums = m.gamma().rowwise().sum();
  Eigen::VectorXd nu(h);
  Eigen::MatrixXd gamma(h, h);
  if (m.domain() == IsingDomain::zero_one) {
    // d = (s+1)/2
    gamma = m.gamma() / 4.0;
    nu = m.nu() / 2.0 + row_sums / 4.0;
  } else {
    // s = 2d-1
    gamma = 4.0 * m.gamma();
    nu = 2.0 * m.nu() - 2.0 * row_sums;
  }
  return IsingModel(nu, gamma, target);
}

}  // namespace mlcwmd
