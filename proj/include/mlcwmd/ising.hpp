#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mlcwmd/rng.hpp"

namespace mlcwmd {

enum class IsingDomain { zero_one, plus_minus };

std::string to_string(IsingDomain d);
IsingDomain ising_domain_from_string(const std::string& s);

// Pairwise binary Markov random field with thresholds nu and symmetric
// zero-diagonal interactions gamma. The energy counts each pair once
// (equivalently 1/2 d'Gd with symmetric G). The log normalizer is
// enumerated at construction when h <= h_max; beyond that only the
// normalizer-free operations (conditionals, pseudo-likelihood) work.
class IsingModel {
 public:
  static constexpr int default_h_max = 15;

  IsingModel() = default;
  IsingModel(Eigen::VectorXd nu, Eigen::MatrixXd gamma, IsingDomain domain,
             int h_max = default_h_max);

  int h() const { return static_cast<int>(nu_.size()); }
  const Eigen::VectorXd& nu() const { return nu_; }
  const Eigen::MatrixXd& gamma() const { return gamma_; }
  IsingDomain domain() const { return domain_; }
  bool exact() const { return exact_; }
  double log_normalizer() const;  // throws CapabilityError when !exact()

  // state values for bit=0 / bit=1 under the domain
  double lo() const { return domain_ == IsingDomain::zero_one ? 0.0 : -1.0; }
  double hi() const { return 1.0; }

  double energy(const Eigen::VectorXd& d) const;
  double logpmf(const Eigen::VectorXd& d) const;
  // log densities of all rows of a N x h matrix in domain values
  Eigen::VectorXd logpmf_rows(const Eigen::MatrixXd& d_rows) const;

  // P(d[l] takes its observed value given the rest); normalizer-free
  double conditional(const Eigen::VectorXd& d, int l) const;

  // probabilities of all 2^h states, bit b of the state index giving
  // coordinate b; requires exact()
  Eigen::VectorXd state_probabilities() const;
  Eigen::VectorXd state_vector(int index) const;

 private:
  Eigen::VectorXd state_vector_impl(long index) const;

  Eigen::VectorXd nu_;
  Eigen::MatrixXd gamma_;
  IsingDomain domain_ = IsingDomain::zero_one;
  double log_s_ = 0.0;
  bool exact_ = false;
};

double ising_log_normalizer(const IsingModel& m);

// sum over rows of weight * sum_l log P(d_l | rest)
double ising_pseudo_loglik(const Eigen::MatrixXd& d_rows,
                           const Eigen::VectorXd& weights,
                           const IsingModel& m);

struct IsingFitOptions {
  double grad_tol = 1e-6;
  int max_iterations = 500;
  double nu_cap = 10.0;  // threshold clamp for degenerate columns
  int h_max = IsingModel::default_h_max;
};

struct IsingFitResult {
  IsingModel model;
  bool converged = false;
  bool any_frozen = false;           // some variable's column was constant
  std::vector<int> frozen_variables;  // 0-based indices
  int iterations = 0;
};

// Pseudo-likelihood maximizer over the h + h(h-1)/2 free parameters
// (upper triangle keeps gamma symmetric). Variables constant within the
// weighted rows get their interactions frozen at 0 and threshold clamped
// to +/- nu_cap.
IsingFitResult ising_fit_pseudo(const Eigen::MatrixXd& d_rows,
                                const Eigen::VectorXd& weights,
                                IsingDomain domain,
                                const IsingModel* init = nullptr,
                                const IsingFitOptions& opts = {});

// gradient of the pseudo log-likelihood in the packed order
// [nu_0..nu_{h-1}, gamma_{01}, gamma_{02}, ..., gamma_{h-2,h-1}];
// exposed for the finite-difference checks
Eigen::VectorXd ising_pseudo_grad(const Eigen::MatrixXd& d_rows,
                                  const Eigen::VectorXd& weights,
                                  const IsingModel& m);

// exact sampler by state enumeration; h <= h_max required
Eigen::MatrixXd ising_sample(const IsingModel& m, int n, Rng& rng);

// statistically equivalent model on the other domain (state map d <-> 2d-1)
IsingModel ising_convert_domain(const IsingModel& m, IsingDomain target);

}  // namespace mlcwmd
