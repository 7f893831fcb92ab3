#include "mlcwmd/em.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "mlcwmd/errors.hpp"
#include "mlcwmd/kern/kernels.hpp"
#include "mlcwmd/metrics.hpp"
#include "mlcwmd/rng.hpp"

namespace mlcwmd {

std::string to_string(InitStrategy s) {
  return s == InitStrategy::random ? "random" : "kmeans";
}
std::string to_string(DVariant v) {
  return v == DVariant::ising ? "ising" : "independent";
}
std::string to_string(RegLikelihood r) {
  return r == RegLikelihood::conditional ? "conditional" : "marginal";
}

int effective_min_cluster_size(const FitConfig& cfg, int m) {
  if (cfg.min_cluster_size > 0) return cfg.min_cluster_size;
  return std::max(5, m + 2);
}

namespace {

Eigen::VectorXd dichotomous_log_density(const Dataset& ds,
                                        const ClusterParams& cp,
                                        DVariant variant) {
  const int n = ds.n();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (ds.h() == 0) return out;
  if (variant == DVariant::ising) {
    return cp.ising.logpmf_rows(ds.D);
  }
  const double lo = ds.d_domain == IsingDomain::zero_one ? 0.0 : -1.0;
  for (int k = 0; k < ds.h(); ++k) {
    const double log_lo = std::log(cp.lambda_d[static_cast<std::size_t>(k)][0]);
    const double log_hi = std::log(cp.lambda_d[static_cast<std::size_t>(k)][1]);
    for (int i = 0; i < n; ++i) {
      out[i] += ds.D(i, k) == lo ? log_lo : log_hi;
    }
  }
  return out;
}

Eigen::VectorXd categorical_log_density(const Dataset& ds,
                                        const ClusterParams& cp) {
  const int n = ds.n();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < ds.q(); ++r) {
    const Eigen::VectorXd logs =
        cp.lambda[static_cast<std::size_t>(r)].array().log();
    for (int i = 0; i < n; ++i) out[i] += logs[ds.V(i, r) - 1];
  }
  return out;
}

}  // namespace

Eigen::MatrixXd marginal_log_mix(const Dataset& ds,
                                 const std::vector<ClusterParams>& params,
                                 DVariant variant) {
  const int n = ds.n();
  const int C = static_cast<int>(params.size());
  Eigen::MatrixXd out(n, C);
  for (int c = 0; c < C; ++c) {
    const auto& cp = params[static_cast<std::size_t>(c)];
    Eigen::VectorXd col = Eigen::VectorXd::Constant(n, std::log(cp.w));
    if (ds.p() > 0) {
      const MvnDensity mvn(cp.mu, cp.sigma);
      col += mvn.logpdf_rows(ds.U);
    }
    if (ds.q() > 0) col += categorical_log_density(ds, cp);
    if (ds.h() > 0) col += dichotomous_log_density(ds, cp, variant);
    out.col(c) = col;
  }
  return out;
}

Eigen::MatrixXd conditional_event_probs(const Design& design,
                                        const Eigen::VectorXi& groups,
                                        const std::vector<ClusterParams>& params,
                                        const Eigen::VectorXd* b_offsets) {
  const int n = static_cast<int>(design.F.rows());
  const int C = static_cast<int>(params.size());
  Eigen::MatrixXd probs(n, C);
  Eigen::VectorXd eta(n);
  for (int c = 0; c < C; ++c) {
    const auto& cp = params[static_cast<std::size_t>(c)];
    eta = design.F * cp.beta;
    if (b_offsets) {
      eta.array() += (*b_offsets)[c];
    } else {
      for (int i = 0; i < n; ++i) {
        const int g = groups[i];
        if (g >= 1 && g <= cp.b_hat.size()) eta[i] += cp.b_hat[g - 1];
      }
    }
    kern::sigmoid_v(eta.data(), probs.col(c).data(),
                    static_cast<std::size_t>(n));
  }
  return probs;
}

Eigen::MatrixXd component_log_densities(const Dataset& ds, const Design& design,
                                        const std::vector<ClusterParams>& params,
                                        DVariant variant, RegLikelihood reg) {
  Eigen::MatrixXd dens = marginal_log_mix(ds, params, variant);
  const int C = static_cast<int>(params.size());
  for (int c = 0; c < C; ++c) {
    const auto& cp = params[static_cast<std::size_t>(c)];
    if (reg == RegLikelihood::conditional) {
      dens.col(c) +=
          conditional_loglik(cp.beta, cp.b_hat, design.F, ds.group, ds.y);
    } else {
      dens.col(c) += marginal_loglik_rows(cp.beta, cp.sigma_b, design.F, ds.y);
    }
  }
  return dens;
}

Eigen::MatrixXd e_step(const Eigen::MatrixXd& log_dens) {
  const int n = static_cast<int>(log_dens.rows());
  const int C = static_cast<int>(log_dens.cols());
  const Eigen::VectorXd row_max = log_dens.rowwise().maxCoeff();
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(row_max[i])) {
      throw FitError("row " + std::to_string(i + 1) +
                     " has zero density under every cluster");
    }
  }
  Eigen::MatrixXd tau = log_dens.colwise() - row_max;
  kern::exp_v(tau.data(), tau.data(), static_cast<std::size_t>(n) * C);
  tau.array().colwise() /= tau.rowwise().sum().array();
  return tau;
}

Eigen::VectorXi hard_assign(const Eigen::MatrixXd& tau) {
  const int n = static_cast<int>(tau.rows());
  const int C = static_cast<int>(tau.cols());
  Eigen::VectorXi z(n);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < C; ++c) {
      if (tau(i, c) > tau(i, best)) best = c;  // strict: ties go low
    }
    z[i] = best + 1;
  }
  return z;
}

std::vector<ClusterParams> m_step(const Dataset& ds, const Design& design,
                                  const Eigen::VectorXi& z, int n_clusters,
                                  const FitConfig& cfg,
                                  const MStepOptions& opts) {
  const int n = ds.n();
  const int min_size = effective_min_cluster_size(cfg, design.m());

  std::vector<std::vector<int>> members(static_cast<std::size_t>(n_clusters));
  for (int i = 0; i < n; ++i) {
    if (z[i] < 1 || z[i] > n_clusters) throw FitError("label out of range");
    members[static_cast<std::size_t>(z[i] - 1)].push_back(i);
  }
  for (int c = 0; c < n_clusters; ++c) {
    const auto sz = members[static_cast<std::size_t>(c)].size();
    if (static_cast<int>(sz) < min_size) {
      throw RestartRequired("cluster " + std::to_string(c + 1) + " has " +
                            std::to_string(sz) + " members (< " +
                            std::to_string(min_size) + ")");
    }
  }

  std::vector<ClusterParams> params(static_cast<std::size_t>(n_clusters));
  for (int c = 0; c < n_clusters; ++c) {
    auto& cp = params[static_cast<std::size_t>(c)];
    const auto& rows = members[static_cast<std::size_t>(c)];
    const int nc = static_cast<int>(rows.size());
    cp.w = static_cast<double>(nc) / n;

    if (ds.p() > 0) {
      Eigen::MatrixXd u(nc, ds.p());
      for (int k = 0; k < nc; ++k) u.row(k) = ds.U.row(rows[static_cast<std::size_t>(k)]);
      cp.mu = u.colwise().mean();
      const Eigen::MatrixXd centered = u.rowwise() - cp.mu.transpose();
      const Eigen::MatrixXd scatter = centered.transpose() * centered / nc;
      const MvnDensity mvn(cp.mu, scatter, cfg.sigma_ridge);
      cp.sigma = mvn.sigma();
      cp.ridge_used = mvn.ridge_used();
    } else {
      cp.mu.resize(0);
      cp.sigma.resize(0, 0);
    }

    cp.lambda.resize(static_cast<std::size_t>(ds.q()));
    for (int r = 0; r < ds.q(); ++r) {
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(ds.v_codecs[static_cast<std::size_t>(r)].k());
      for (int i : rows) counts[ds.V(i, r) - 1] += 1.0;
      Eigen::VectorXd lam = counts / nc;
      lam = lam.cwiseMax(cfg.lambda_floor);
      cp.lambda[static_cast<std::size_t>(r)] = lam / lam.sum();
    }

    if (ds.h() > 0) {
      Eigen::MatrixXd d(nc, ds.h());
      for (int k = 0; k < nc; ++k) d.row(k) = ds.D.row(rows[static_cast<std::size_t>(k)]);
      if (cfg.variant == DVariant::ising) {
        const IsingModel* warm = nullptr;
        if (opts.warm && opts.warm->size() == params.size()) {
          warm = &(*opts.warm)[static_cast<std::size_t>(c)].ising;
        }
        try {
          const IsingFitResult ir = ising_fit_pseudo(
              d, Eigen::VectorXd::Ones(nc), ds.d_domain,
              (warm && warm->h() == ds.h()) ? warm : nullptr);
          cp.ising = ir.model;
          cp.ising_frozen = ir.any_frozen;
        } catch (const FitError& e) {
          throw RestartRequired(std::string("ising update failed: ") + e.what());
        }
      } else {
        const double lo = ds.d_domain == IsingDomain::zero_one ? 0.0 : -1.0;
        cp.lambda_d.resize(static_cast<std::size_t>(ds.h()));
        for (int k = 0; k < ds.h(); ++k) {
          double n_lo = 0.0;
          for (int i : rows) n_lo += ds.D(i, k) == lo ? 1.0 : 0.0;
          Eigen::Vector2d lam(n_lo / nc, (nc - n_lo) / nc);
          lam = lam.cwiseMax(cfg.lambda_floor);
          cp.lambda_d[static_cast<std::size_t>(k)] = lam / lam.sum();
        }
      }
    }

    Eigen::VectorXd wvec = Eigen::VectorXd::Zero(n);
    for (int i : rows) wvec[i] = 1.0;
    MixedOptions mopts;
    mopts.compute_se = opts.compute_se;
    if (opts.warm && opts.warm->size() == params.size()) {
      const auto& prev = (*opts.warm)[static_cast<std::size_t>(c)];
      if (prev.beta.size() == design.m()) {
        mopts.beta_init = &prev.beta;
        mopts.sigma_init = std::max(prev.sigma_b, 1e-3);
      }
    }
    try {
      const MixedFit mf = fit_logistic_mixed(design.F, ds.group, ds.n_groups(),
                                             ds.y.cast<double>(), wvec, mopts);
      cp.beta = mf.beta;
      cp.beta_se = mf.se;
      cp.beta_p = mf.p_value;
      cp.sigma_b = mf.sigma_b;
      cp.b_hat = mf.b_hat;
      cp.b_sd = mf.b_sd;
      cp.reg_converged = mf.converged;
      cp.reg_separation = mf.separation;
    } catch (const FitError& e) {
      throw RestartRequired(std::string("regression update failed: ") +
                            e.what());
    }
  }
  return params;
}

double classification_loglik(const Dataset& ds, const Design& design,
                             const std::vector<ClusterParams>& params,
                             const Eigen::VectorXi& z, DVariant variant,
                             RegLikelihood reg) {
  const Eigen::MatrixXd dens =
      component_log_densities(ds, design, params, variant, reg);
  double total = 0.0;
  for (int i = 0; i < ds.n(); ++i) total += dens(i, z[i] - 1);
  return total;
}

double observed_loglik(const Eigen::MatrixXd& log_dens) {
  double total = 0.0;
  for (int i = 0; i < log_dens.rows(); ++i) {
    const double mx = log_dens.row(i).maxCoeff();
    total += mx + std::log((log_dens.row(i).array() - mx).exp().sum());
  }
  return total;
}

int bic_param_count(int n_clusters, int m, int p,
                    const std::vector<int>& v_levels, int h, DVariant variant) {
  const int k_reg = n_clusters * (1 + m);
  const int k_cont = n_clusters * (p * (p + 3)) / 2;
  int k_cat = 0;
  for (int kr : v_levels) k_cat += kr - 1;
  k_cat *= n_clusters;
  const int k_dich = variant == DVariant::ising
                         ? n_clusters * (h * (h + 1)) / 2
                         : n_clusters * h;
  return k_reg + k_cont + k_cat + k_dich + (n_clusters - 1);
}

namespace {

Eigen::VectorXi random_labels(int n, int n_clusters, Rng& rng) {
  Eigen::VectorXi z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.uniform_int(1, n_clusters);
  return z;
}

Eigen::VectorXi kmeans_labels(const Dataset& ds, int n_clusters, Rng& rng) {
  const int n = ds.n();
  const int p = ds.p();
  if (p == 0) return random_labels(n, n_clusters, rng);

  Eigen::MatrixXd u = ds.U;
  const Eigen::RowVectorXd mean = u.colwise().mean();
  u.rowwise() -= mean;
  for (int k = 0; k < p; ++k) {
    const double sd = std::sqrt(u.col(k).squaredNorm() / n);
    if (sd > 0) u.col(k) /= sd;
  }

  // k-means++ seeding
  Eigen::MatrixXd centers(n_clusters, p);
  centers.row(0) = u.row(rng.uniform_int(0, n - 1));
  Eigen::VectorXd d2 =
      (u.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < n_clusters; ++c) {
    centers.row(c) = u.row(rng.categorical(d2));
    d2 = d2.cwiseMin((u.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  Eigen::VectorXi z(n);
  for (int iter = 0; iter < 30; ++iter) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = (u.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < n_clusters; ++c) {
        const double dd = (u.row(i) - centers.row(c)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (z[i] != best + 1) moved = true;
      z[i] = best + 1;
    }
    for (int c = 0; c < n_clusters; ++c) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(p);
      int cnt = 0;
      for (int i = 0; i < n; ++i) {
        if (z[i] == c + 1) {
          acc += u.row(i);
          ++cnt;
        }
      }
      if (cnt > 0) centers.row(c) = acc / cnt;
    }
    if (!moved && iter > 0) break;
  }
  return z;
}

void canonicalize(ModelFit& fit) {
  const int C = fit.n_clusters;
  std::vector<int> order(static_cast<std::size_t>(C));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = fit.components[static_cast<std::size_t>(a)];
    const auto& pb = fit.components[static_cast<std::size_t>(b)];
    if (pa.w != pb.w) return pa.w > pb.w;
    const double ma = pa.mu.size() > 0 ? pa.mu[0] : 0.0;
    const double mb = pb.mu.size() > 0 ? pb.mu[0] : 0.0;
    return ma < mb;
  });

  std::vector<ClusterParams> comps;
  comps.reserve(static_cast<std::size_t>(C));
  Eigen::MatrixXd tau(fit.tau.rows(), C);
  std::vector<int> relabel(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    comps.push_back(fit.components[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])]);
    tau.col(c) = fit.tau.col(order[static_cast<std::size_t>(c)]);
    relabel[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])] = c + 1;
  }
  fit.components = std::move(comps);
  fit.tau = std::move(tau);
  for (int i = 0; i < fit.z.size(); ++i) {
    fit.z[i] = relabel[static_cast<std::size_t>(fit.z[i] - 1)];
  }
}

}  // namespace

Eigen::VectorXd predictive_scores(const Dataset& ds, const Design& design,
                                  const std::vector<ClusterParams>& params,
                                  DVariant variant,
                                  const Eigen::VectorXd* b_offsets) {
  const Eigen::MatrixXd marg = marginal_log_mix(ds, params, variant);
  const Eigen::MatrixXd probs =
      conditional_event_probs(design, ds.group, params, b_offsets);
  const int n = ds.n();
  const int C = static_cast<int>(params.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const double mx = marg.row(i).maxCoeff();
    double denom = 0.0, numer = 0.0;
    for (int c = 0; c < C; ++c) {
      const double wgt = std::exp(marg(i, c) - mx);
      denom += wgt;
      numer += wgt * probs(i, c);
    }
    out[i] = numer / denom;
  }
  return out;
}

ModelFit fit_single(const Dataset& ds, int n_clusters, const FitConfig& cfg,
                    std::uint64_t seed, int start_index) {
  if (n_clusters < 1) throw FitError("cluster count must be >= 1");
  const std::vector<std::string> formula =
      cfg.formula.empty() ? default_formula(ds) : cfg.formula;
  const Design design = build_design(ds, formula, cfg.intercept);
  const int min_size = effective_min_cluster_size(cfg, design.m());
  if (static_cast<long>(min_size) * n_clusters > ds.n()) {
    throw FitError("dataset too small for " + std::to_string(n_clusters) +
                   " clusters of at least " + std::to_string(min_size));
  }

  Rng rng(seed);
  std::string last_restart;
  for (int attempt = 0; attempt < cfg.max_init_redraws; ++attempt) {
    Eigen::VectorXi z = cfg.init == InitStrategy::kmeans && attempt == 0
                            ? kmeans_labels(ds, n_clusters, rng)
                            : random_labels(ds.n(), n_clusters, rng);
    {
      Eigen::VectorXi counts = Eigen::VectorXi::Zero(n_clusters);
      for (int i = 0; i < ds.n(); ++i) counts[z[i] - 1]++;
      if (counts.minCoeff() < min_size) continue;
    }

    try {
      ModelFit fit;
      fit.n_clusters = n_clusters;
      fit.variant = cfg.variant;
      fit.d_domain = ds.d_domain;
      fit.seed = seed;
      fit.start_index = start_index;
      fit.schema = ds.schema();
      fit.design_names = design.names;
      fit.formula = formula;
      fit.intercept = cfg.intercept;
      fit.reg_likelihood = cfg.reg_likelihood;

      std::vector<ClusterParams> params;
      Eigen::VectorXi z_cur = z;
      double obj_prev = -std::numeric_limits<double>::infinity();
      double best_obj = -std::numeric_limits<double>::infinity();

      std::vector<ClusterParams> best_params;
      Eigen::MatrixXd best_tau;
      Eigen::VectorXi best_z;
      const int patience = 10;

      for (int it = 1; it <= cfg.max_iter; ++it) {
        MStepOptions mopts;
        mopts.warm = params.empty() ? nullptr : &params;
        params = m_step(ds, design, z_cur, n_clusters, cfg, mopts);

        const Eigen::MatrixXd dens = component_log_densities(
            ds, design, params, cfg.variant, cfg.reg_likelihood);
        Eigen::MatrixXd tau_new;
        try {
          tau_new = e_step(dens);
        } catch (const FitError& e) {
          throw RestartRequired(e.what());
        }
        Eigen::VectorXi z_new = hard_assign(tau_new);
        {
          Eigen::VectorXi counts = Eigen::VectorXi::Zero(n_clusters);
          for (int i = 0; i < ds.n(); ++i) counts[z_new[i] - 1]++;
          if (counts.minCoeff() < min_size) {
            throw RestartRequired("assignment shrank a cluster below " +
                                  std::to_string(min_size));
          }
        }

        double obj = 0.0;
        for (int i = 0; i < ds.n(); ++i) obj += dens(i, z_new[i] - 1);
        fit.n_iterations = it;

        if (obj > best_obj) {
          best_obj = obj;
          best_params = params;
          best_tau = tau_new;
          best_z = z_new;
          fit.best_iteration = it;
          fit.trace.push_back(obj);
        } else if (obj < best_obj - 1e-6) {
          ++fit.nonmonotone_steps;
        }

        const bool tol_hit = it > 1 && std::abs(obj - obj_prev) < cfg.tol;
        const bool stalled = it - fit.best_iteration >= patience;
        z_cur = z_new;
        obj_prev = obj;
        if (tol_hit || stalled) {
          fit.converged = true;
          break;
        }
      }

      params = std::move(best_params);
      Eigen::MatrixXd tau = std::move(best_tau);
      z_cur = best_z;
      fit.objective = best_obj;
      Eigen::MatrixXd dens = component_log_densities(
          ds, design, params, cfg.variant, cfg.reg_likelihood);
      // Wald statistics at the converged parameters; the parameters,
      // assignments and responsibilities themselves stay untouched
      for (int c = 0; c < n_clusters; ++c) {
        auto& cp = params[static_cast<std::size_t>(c)];
        Eigen::VectorXd wvec = Eigen::VectorXd::Zero(ds.n());
        for (int i = 0; i < ds.n(); ++i) {
          if (z_cur[i] == c + 1) wvec[i] = 1.0;
        }
        const auto [se, pv] =
            mixed_wald_stats(design.F, ds.group, ds.n_groups(),
                             ds.y.cast<double>(), wvec, cp.beta, cp.sigma_b);
        cp.beta_se = se;
        cp.beta_p = pv;
      }
      fit.components = std::move(params);
      fit.tau = std::move(tau);
      fit.z = z_cur;
      fit.loglik = observed_loglik(dens);
      fit.k_params = bic_param_count(n_clusters, design.m(), ds.p(),
                                     ds.v_levels(), ds.h(), cfg.variant);
      fit.bic = -2.0 * fit.loglik + fit.k_params * std::log(ds.n());
      canonicalize(fit);

      const Eigen::VectorXd scores =
          predictive_scores(ds, design, fit.components, cfg.variant, nullptr);
      const RocResult roc = roc_cutoff(scores, ds.y);
      fit.train_cutoff = roc.cutoff;
      fit.train_accuracy = roc.accuracy;
      fit.train_auc = roc.auc;
      return fit;
    } catch (const RestartRequired& e) {
      last_restart = e.what();
      continue;
    }
  }
  throw RestartRequired("start failed after " +
                        std::to_string(cfg.max_init_redraws) +
                        " init re-draws; last: " + last_restart);
}

SelectResult fit_select(const Dataset& ds, const FitConfig& cfg) {
  if (cfg.c_grid.empty()) throw FitError("empty cluster grid");

  struct Task {
    int c = 0;
    int start = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    ModelFit fit;
    std::string error;
  };
  std::vector<Task> tasks;
  for (int c : cfg.c_grid) {
    for (int s = 0; s < cfg.n_starts; ++s) {
      Task t;
      t.c = c;
      t.start = s;
      t.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(c) * 10007 + s);
      tasks.push_back(std::move(t));
    }
  }

  auto run_task = [&](Task& t) {
    try {
      t.fit = fit_single(ds, t.c, cfg, t.seed, t.start);
      t.ok = true;
    } catch (const RestartRequired& e) {
      t.error = e.what();
    } catch (const FitError& e) {
      t.error = e.what();
    }
  };

  if (cfg.jobs > 1) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        run_task(tasks[i]);
      }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  } else {
    for (auto& t : tasks) run_task(t);
  }

  SelectResult res;
  for (const auto& t : tasks) {
    StartLog log;
    log.n_clusters = t.c;
    log.start = t.start;
    log.seed = t.seed;
    log.ok = t.ok;
    if (t.ok) {
      log.loglik = t.fit.loglik;
      log.bic = t.fit.bic;
      log.iterations = t.fit.n_iterations;
    } else {
      log.error = t.error;
    }
    res.starts.push_back(std::move(log));
  }
  bool have_best = false;
  for (int c : cfg.c_grid) {
    SelectRow row;
    row.n_clusters = c;
    const Task* best = nullptr;
    for (const auto& t : tasks) {
      if (t.c != c) continue;
      if (!t.ok) {
        ++row.n_failed_starts;
        continue;
      }
      if (!best || t.fit.loglik > best->fit.loglik) best = &t;
    }
    if (best) {
      row.ok = true;
      row.loglik = best->fit.loglik;
      row.bic = best->fit.bic;
      row.k_params = best->fit.k_params;
      row.best_start = best->start;
      if (!have_best || best->fit.bic < res.best.bic) {
        res.best = best->fit;
        have_best = true;
      }
      res.fits.emplace_back(best->fit);
    } else {
      res.fits.emplace_back(std::nullopt);
    }
    res.table.push_back(row);
  }
  if (!have_best) {
    throw FitError("every start failed for every cluster count");
  }
  return res;
}

}  // namespace mlcwmd
