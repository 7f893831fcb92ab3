#include "mlcwmd/simstudy.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "mlcwmd/kern/kernels.hpp"
#include "mlcwmd/metrics.hpp"
#include "mlcwmd/predict.hpp"
#include "mlcwmd/rng.hpp"

namespace mlcwmd {

std::vector<std::string> truth_design_names(const GroundTruth& gt) {
  std::vector<std::string> names;
  for (int k = 0; k < gt.p(); ++k) names.push_back("x" + std::to_string(k + 1));
  for (int r = 0; r < gt.q(); ++r) {
    for (int level = 2; level <= gt.v_levels[static_cast<std::size_t>(r)];
         ++level) {
      names.push_back("a" + std::to_string(r + 1) + "=" +
                      std::to_string(level));
    }
  }
  for (int k = 0; k < gt.h(); ++k) names.push_back("d" + std::to_string(k + 1));
  return names;
}

std::vector<int> match_components_to_truth(const ModelFit& fit,
                                           const GroundTruth& gt) {
  const int C = fit.n_clusters;
  std::vector<int> perm(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) perm[static_cast<std::size_t>(c)] = c;
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int c = 0; c < C; ++c) {
      cost += (fit.components[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])].mu -
               gt.clusters[static_cast<std::size_t>(c)].mu)
                  .squaredNorm();
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Eigen::VectorXd align_beta_to_truth(
    const Eigen::VectorXd& beta, const std::vector<std::string>& fit_names,
    const std::vector<std::string>& truth_names) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(
      static_cast<long>(truth_names.size()), std::nan(""));
  for (std::size_t t = 0; t < truth_names.size(); ++t) {
    for (std::size_t f = 0; f < fit_names.size(); ++f) {
      if (fit_names[f] == truth_names[t]) {
        out[static_cast<long>(t)] = beta[static_cast<long>(f)];
        break;
      }
    }
  }
  return out;
}

namespace {

double min_trace_delta(const ModelFit& fit) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < fit.trace.size(); ++t) {
    m = std::min(m, fit.trace[t] - fit.trace[t - 1]);
  }
  return m;
}

MethodMetrics mixture_metrics(const SelectResult& sel, const Dataset& test,
                              const Eigen::VectorXi& labels) {
  MethodMetrics mm;
  mm.ok = true;
  mm.selected_c = sel.best.n_clusters;
  mm.bic = sel.best.bic;
  mm.loglik = sel.best.loglik;
  mm.ari = adjusted_rand_index(sel.best.z, labels);
  mm.train_accuracy = sel.best.train_accuracy;
  mm.train_auc = sel.best.train_auc;
  mm.cutoff = sel.best.train_cutoff;
  const Dataset test_enc = reencode_with_schema(test, sel.best.schema);
  const Eigen::VectorXd scores =
      predict_score_vector(sel.best, test_enc, BMode::group_or_zero);
  mm.test_accuracy = accuracy_at(scores, test_enc.y, sel.best.train_cutoff);
  return mm;
}

ReplicateResult run_replicate(const GroundTruth& truth,
                              const SimStudyOptions& opts, int rep,
                              const std::vector<std::string>& truth_names) {
  const auto t0 = std::chrono::steady_clock::now();
  ReplicateResult out;
  out.replicate = rep;

  Rng rng_train(derive_seed(opts.seed, 2 * static_cast<std::uint64_t>(rep)));
  Rng rng_test(derive_seed(opts.seed, 2 * static_cast<std::uint64_t>(rep) + 1));
  const GeneratedData train = generate(truth, rng_train);
  const GeneratedData test =
      generate_test_split(truth, opts.n_test, rng_test);

  FitConfig cfg;
  cfg.c_grid = opts.c_grid;
  cfg.n_starts = opts.n_starts;
  cfg.seed = derive_seed(opts.seed, 10000 + static_cast<std::uint64_t>(rep));
  cfg.init = opts.init;
  cfg.intercept = false;  // the generating design has no fixed intercept
  cfg.variant = DVariant::ising;

  const int C = truth.n_clusters();
  try {
    const SelectResult full = fit_select(train.ds, cfg);
    out.cwmd = mixture_metrics(full, test.ds, train.labels);
    out.table_full = full.table;
    for (const auto& f : full.fits) {
      if (f) out.min_trace_delta = std::min(out.min_trace_delta, min_trace_delta(*f));
    }
    for (std::size_t r = 0; r < full.table.size(); ++r) {
      if (full.table[r].n_clusters == opts.recovery_c && full.fits[r]) {
        const ModelFit& f3 = *full.fits[r];
        const std::vector<int> matched = match_components_to_truth(f3, truth);
        out.beta_recovery.resize(C, static_cast<long>(truth_names.size()));
        out.sigma_b_recovery.resize(C);
        for (int c = 0; c < C; ++c) {
          const auto& cp =
              f3.components[static_cast<std::size_t>(matched[static_cast<std::size_t>(c)])];
          out.beta_recovery.row(c) =
              align_beta_to_truth(cp.beta, f3.design_names, truth_names)
                  .transpose();
          out.sigma_b_recovery[c] = cp.sigma_b;
        }
      }
    }
  } catch (const std::exception& e) {
    out.cwmd.error = e.what();
  }

  try {
    FitConfig cfg_nod = cfg;
    cfg_nod.variant = DVariant::independent;
    const SelectResult nod = fit_select(train.ds, cfg_nod);
    out.cwmd_nod = mixture_metrics(nod, test.ds, train.labels);
    out.table_nod = nod.table;
    for (const auto& f : nod.fits) {
      if (f) out.min_trace_delta = std::min(out.min_trace_delta, min_trace_delta(*f));
    }
  } catch (const std::exception& e) {
    out.cwmd_nod.error = e.what();
  }

  const Design dtrain = build_design(train.ds, default_formula(train.ds), false);
  const Dataset test_enc = reencode_with_schema(test.ds, train.ds.schema());
  const Design dtest = build_design(test_enc, default_formula(train.ds), false);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(train.ds.n());

  try {
    const MixedFit mf = fit_logistic_mixed(dtrain.F, train.ds.group,
                                           train.ds.n_groups(),
                                           train.ds.y.cast<double>(), ones);
    Eigen::VectorXd eta = dtrain.F * mf.beta;
    for (int i = 0; i < train.ds.n(); ++i) {
      eta[i] += mf.b_hat[train.ds.group[i] - 1];
    }
    Eigen::VectorXd scores(train.ds.n());
    kern::sigmoid_v(eta.data(), scores.data(),
                    static_cast<std::size_t>(train.ds.n()));
    const RocResult roc = roc_cutoff(scores, train.ds.y);
    out.glmer.ok = true;
    out.glmer.cutoff = roc.cutoff;
    out.glmer.train_accuracy = roc.accuracy;
    out.glmer.train_auc = roc.auc;
    out.glmer.loglik = mf.loglik;
    out.glmer.bic = -2.0 * mf.loglik +
                    (dtrain.m() + 1) * std::log(static_cast<double>(train.ds.n()));
    Eigen::VectorXd eta_t = dtest.F * mf.beta;
    for (int i = 0; i < test_enc.n(); ++i) {
      const int g = test_enc.group[i];
      if (g >= 1 && g <= mf.b_hat.size()) eta_t[i] += mf.b_hat[g - 1];
    }
    Eigen::VectorXd scores_t(test_enc.n());
    kern::sigmoid_v(eta_t.data(), scores_t.data(),
                    static_cast<std::size_t>(test_enc.n()));
    out.glmer.test_accuracy = accuracy_at(scores_t, test_enc.y, roc.cutoff);
  } catch (const std::exception& e) {
    out.glmer.error = e.what();
  }

  try {
    const GlmFit gf =
        fit_logistic_glm(dtrain.F, train.ds.y.cast<double>(), ones);
    Eigen::VectorXd eta = dtrain.F * gf.beta;
    Eigen::VectorXd scores(train.ds.n());
    kern::sigmoid_v(eta.data(), scores.data(),
                    static_cast<std::size_t>(train.ds.n()));
    const RocResult roc = roc_cutoff(scores, train.ds.y);
    out.glm.ok = true;
    out.glm.cutoff = roc.cutoff;
    out.glm.train_accuracy = roc.accuracy;
    out.glm.train_auc = roc.auc;
    out.glm.loglik = gf.loglik;
    out.glm.bic = -2.0 * gf.loglik +
                  dtrain.m() * std::log(static_cast<double>(train.ds.n()));
    Eigen::VectorXd eta_t = dtest.F * gf.beta;
    Eigen::VectorXd scores_t(eta_t.size());
    kern::sigmoid_v(eta_t.data(), scores_t.data(),
                    static_cast<std::size_t>(eta_t.size()));
    out.glm.test_accuracy = accuracy_at(scores_t, test_enc.y, roc.cutoff);
    out.beta_glm = align_beta_to_truth(gf.beta, dtrain.names, truth_names);
  } catch (const std::exception& e) {
    out.glm.error = e.what();
  }

  out.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace

SimStudyResult run_sim_study(const GroundTruth& truth,
                             const SimStudyOptions& opts) {
  SimStudyResult res;
  res.truth = truth;
  res.design_names = truth_design_names(truth);
  res.beta_truth.resize(truth.n_clusters(),
                        static_cast<long>(res.design_names.size()));
  for (int c = 0; c < truth.n_clusters(); ++c) {
    res.beta_truth.row(c) =
        truth.clusters[static_cast<std::size_t>(c)].beta.transpose();
  }

  res.replicates.resize(static_cast<std::size_t>(opts.replicates));
  if (opts.jobs > 1) {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= opts.replicates) return;
        res.replicates[static_cast<std::size_t>(r)] =
            run_replicate(truth, opts, r + 1, res.design_names);
      }
    };
    std::vector<std::thread> pool;
    const int nt = std::min(opts.jobs, opts.replicates);
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  } else {
    for (int r = 0; r < opts.replicates; ++r) {
      res.replicates[static_cast<std::size_t>(r)] =
          run_replicate(truth, opts, r + 1, res.design_names);
    }
  }
  return res;
}

}  // namespace mlcwmd
