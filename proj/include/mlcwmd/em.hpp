#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlcwmd/dataset.hpp"
#include "mlcwmd/design.hpp"
#include "mlcwmd/glmm.hpp"
#include "mlcwmd/ising.hpp"
#include "mlcwmd/mvn.hpp"

namespace mlcwmd {

enum class InitStrategy { random, kmeans };
enum class DVariant { ising, independent };  // full model vs per-column binomials
enum class RegLikelihood { conditional, marginal };

std::string to_string(InitStrategy s);
std::string to_string(DVariant v);
std::string to_string(RegLikelihood r);

struct FitConfig {
  std::vector<int> c_grid{2, 3, 4};
  int n_starts = 10;
  int max_iter = 100;
  double tol = 1e-5;
  std::uint64_t seed = 1;
  InitStrategy init = InitStrategy::random;
  IsingDomain ising_domain = IsingDomain::zero_one;
  DVariant variant = DVariant::ising;
  RegLikelihood reg_likelihood = RegLikelihood::conditional;
  double lambda_floor = 1e-6;
  double sigma_ridge = 1e-8;
  int min_cluster_size = 0;  // 0 = auto: max(5, m + 2)
  std::vector<std::string> formula;  // empty = all covariate columns
  bool intercept = true;
  int jobs = 1;
  int max_init_redraws = 20;
};

struct ClusterParams {
  double w = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_se;
  Eigen::VectorXd beta_p;
  double sigma_b = 0.0;
  Eigen::VectorXd b_hat;  // length J
  Eigen::VectorXd b_sd;
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  std::vector<Eigen::VectorXd> lambda;    // per categorical column
  std::vector<Eigen::VectorXd> lambda_d;  // DVariant::independent: per D column, (P(lo), P(hi))
  IsingModel ising;                       // DVariant::ising
  bool reg_converged = true;
  bool reg_separation = false;
  bool ising_frozen = false;
  double ridge_used = 0.0;
};

struct ModelFit {
  int n_clusters = 0;
  DVariant variant = DVariant::ising;
  IsingDomain d_domain = IsingDomain::zero_one;
  std::vector<ClusterParams> components;  // canonical order: descending w
  Eigen::MatrixXd tau;                    // N x C
  Eigen::VectorXi z;                      // 1..C
  double loglik = 0.0;    // observed-data mixture log-likelihood
  double objective = 0.0; // classification log-likelihood of the kept state
  double bic = 0.0;
  int k_params = 0;
  // objective at each accepted improvement; the engine returns the best
  // state visited, so the trace is non-decreasing
  std::vector<double> trace;
  std::uint64_t seed = 0;
  int start_index = 0;
  int n_iterations = 0;
  int best_iteration = 0;
  bool converged = false;
  // iterations whose objective fell below the best seen; the regression
  // and Ising sub-fits maximize surrogates (Laplace marginal,
  // pseudo-likelihood), so the raw sequence is not strictly monotone
  int nonmonotone_steps = 0;
  // reuse surface for prediction on new files
  DataSchema schema;
  std::vector<std::string> design_names;
  std::vector<std::string> formula;
  bool intercept = true;
  RegLikelihood reg_likelihood = RegLikelihood::conditional;
  // in-sample ROC summary, frozen at fit time
  double train_cutoff = 0.5;
  double train_accuracy = 0.0;
  double train_auc = 0.0;
};

// N x C matrix of per-cluster log joint densities
// log p(y|x, xi_c) + log phi + log psi + log zeta + log w_c. The
// regression term plugs in the group modes (conditional) or integrates
// the random intercept out (marginal).
Eigen::MatrixXd component_log_densities(
    const Dataset& ds, const Design& design,
    const std::vector<ClusterParams>& params, DVariant variant,
    RegLikelihood reg = RegLikelihood::conditional);

// covariate-only part: log(phi * psi * zeta * w) per row and cluster
Eigen::MatrixXd marginal_log_mix(const Dataset& ds,
                                 const std::vector<ClusterParams>& params,
                                 DVariant variant);

// P(y=1 | x, xi_c) per row and cluster; random intercept at b_offsets[c]
// when given, otherwise at the group's fitted mode (0 for unseen groups)
Eigen::MatrixXd conditional_event_probs(const Design& design,
                                        const Eigen::VectorXi& groups,
                                        const std::vector<ClusterParams>& params,
                                        const Eigen::VectorXd* b_offsets);

// marginal mixture probability of y=1 per row (the model's prediction
// formula): covariate-posterior-weighted average of the per-cluster
// event probabilities
Eigen::VectorXd predictive_scores(const Dataset& ds, const Design& design,
                                  const std::vector<ClusterParams>& params,
                                  DVariant variant,
                                  const Eigen::VectorXd* b_offsets = nullptr);

// Responsibilities from the log densities; rows sum to 1. Throws
// naming the row when a row's densities are all impossible.
Eigen::MatrixXd e_step(const Eigen::MatrixXd& log_dens);

// row-wise argmax, ties to the lowest cluster index; labels 1..C
Eigen::VectorXi hard_assign(const Eigen::MatrixXd& tau);

struct MStepOptions {
  bool compute_se = false;
  const std::vector<ClusterParams>* warm = nullptr;
};

// Per-cluster closed-form and sub-model updates at hard labels z;
// throws RestartRequired when a cluster falls under min_cluster_size.
std::vector<ClusterParams> m_step(const Dataset& ds, const Design& design,
                                  const Eigen::VectorXi& z, int n_clusters,
                                  const FitConfig& cfg,
                                  const MStepOptions& opts = {});

double classification_loglik(const Dataset& ds, const Design& design,
                             const std::vector<ClusterParams>& params,
                             const Eigen::VectorXi& z, DVariant variant,
                             RegLikelihood reg = RegLikelihood::conditional);

double observed_loglik(const Eigen::MatrixXd& log_dens);

int bic_param_count(int n_clusters, int m, int p,
                    const std::vector<int>& v_levels, int h, DVariant variant);

ModelFit fit_single(const Dataset& ds, int n_clusters, const FitConfig& cfg,
                    std::uint64_t seed, int start_index = 0);

struct SelectRow {
  int n_clusters = 0;
  bool ok = false;
  double loglik = 0.0;
  double bic = 0.0;
  int k_params = 0;
  int n_failed_starts = 0;
  int best_start = -1;
};

struct StartLog {
  int n_clusters = 0;
  int start = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double loglik = 0.0;
  double bic = 0.0;
  int iterations = 0;
  std::string error;
};

struct SelectResult {
  ModelFit best;
  std::vector<SelectRow> table;
  std::vector<std::optional<ModelFit>> fits;  // per-C winners, table order
  std::vector<StartLog> starts;               // every (C, start) attempt
};

// n_starts runs per C (kept by highest observed log-likelihood), then
// BIC argmin across the grid. Failed starts are logged in the table, a
// C with no surviving start is marked not-ok.
SelectResult fit_select(const Dataset& ds, const FitConfig& cfg);

int effective_min_cluster_size(const FitConfig& cfg, int m);

}  // namespace mlcwmd
