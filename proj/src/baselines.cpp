#include "mlcwmd/baselines.hpp"

#include <cmath>

#include "mlcwmd/errors.hpp"
#include "mlcwmd/kern/kernels.hpp"
#include "mlcwmd/metrics.hpp"
#include "mlcwmd/predict.hpp"

namespace mlcwmd {

Dataset reencode_with_schema(const Dataset& ds, const DataSchema& schema) {
  Dataset out = ds;
  if (static_cast<int>(schema.v_codecs.size()) != ds.q()) {
    throw DataError("schema has a different categorical block");
  }
  for (int r = 0; r < ds.q(); ++r) {
    const auto& own = ds.v_codecs[static_cast<std::size_t>(r)];
    const auto& want = schema.v_codecs[static_cast<std::size_t>(r)];
    std::vector<int> remap(static_cast<std::size_t>(own.k()) + 1, -1);
    for (int code = 1; code <= own.k(); ++code) {
      const int mapped = want.code_of(own.levels[static_cast<std::size_t>(code - 1)]);
      if (mapped < 0) {
        std::string known;
        for (const auto& lv : want.levels) known += (known.empty() ? "" : ", ") + lv;
        throw DataError("categorical level '" +
                        own.levels[static_cast<std::size_t>(code - 1)] +
                        "' in column '" + ds.v_names[static_cast<std::size_t>(r)] +
                        "' unknown to the fitted model (known: " + known + ")");
      }
      remap[static_cast<std::size_t>(code)] = mapped;
    }
    for (int i = 0; i < ds.n(); ++i) {
      out.V(i, r) = remap[static_cast<std::size_t>(ds.V(i, r))];
    }
    out.v_codecs[static_cast<std::size_t>(r)] = want;
  }

  std::vector<int> gmap(static_cast<std::size_t>(ds.n_groups()) + 1, 0);
  for (int g = 1; g <= ds.n_groups(); ++g) {
    const auto& label = ds.group_levels[static_cast<std::size_t>(g - 1)];
    for (std::size_t j = 0; j < schema.group_levels.size(); ++j) {
      if (schema.group_levels[j] == label) {
        gmap[static_cast<std::size_t>(g)] = static_cast<int>(j) + 1;
        break;
      }
    }
  }
  for (int i = 0; i < ds.n(); ++i) {
    out.group[i] = ds.group[i] >= 1 ? gmap[static_cast<std::size_t>(ds.group[i])] : 0;
  }
  out.group_levels = schema.group_levels;
  return out;
}

namespace {

BaselineRow mixture_row(const std::string& name, const Dataset& train,
                        const Dataset& test, FitConfig cfg,
                        const Eigen::VectorXi* truth_train,
                        std::optional<ModelFit>* keep) {
  BaselineRow row;
  row.method = name;
  try {
    const SelectResult sel = fit_select(train, cfg);
    const ModelFit& fit = sel.best;
    row.selected_c = fit.n_clusters;
    row.bic = fit.bic;
    row.loglik = fit.loglik;
    row.cutoff = fit.train_cutoff;
    row.train_accuracy = fit.train_accuracy;
    row.train_auc = fit.train_auc;
    if (truth_train) row.ari_train = adjusted_rand_index(fit.z, *truth_train);

    const Dataset test_enc = reencode_with_schema(test, fit.schema);
    const Eigen::VectorXd scores =
        predict_score_vector(fit, test_enc, BMode::group_or_zero);
    row.test_accuracy = accuracy_at(scores, test_enc.y, fit.train_cutoff);
    row.ok = true;
    if (keep) *keep = fit;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

BaselineReport compare_baselines(const Dataset& train, const Dataset& test,
                                 const FitConfig& cfg,
                                 const Eigen::VectorXi* truth_train) {
  BaselineReport report;
  const std::vector<std::string> formula =
      cfg.formula.empty() ? default_formula(train) : cfg.formula;

  {
    FitConfig full = cfg;
    full.variant = DVariant::ising;
    report.rows.push_back(mixture_row("ml-cwmd", train, test, full,
                                      truth_train, &report.cwmd_fit));
  }
  {
    FitConfig nod = cfg;
    nod.variant = DVariant::independent;
    report.rows.push_back(mixture_row("ml-cwmd-nod", train, test, nod,
                                      truth_train, &report.cwmd_nod_fit));
  }

  const Design dtrain = build_design(train, formula, cfg.intercept);
  const Design dtest = build_design(
      reencode_with_schema(test, train.schema()), formula, cfg.intercept);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(train.n());

  {
    BaselineRow row;
    row.method = "glmer";
    try {
      const MixedFit mf =
          fit_logistic_mixed(dtrain.F, train.group, train.n_groups(),
                             train.y.cast<double>(), ones);
      Eigen::VectorXd eta = dtrain.F * mf.beta;
      for (int i = 0; i < train.n(); ++i) {
        const int g = train.group[i];
        if (g >= 1 && g <= mf.b_hat.size()) eta[i] += mf.b_hat[g - 1];
      }
      Eigen::VectorXd scores(train.n());
      kern::sigmoid_v(eta.data(), scores.data(),
                      static_cast<std::size_t>(train.n()));
      const RocResult roc = roc_cutoff(scores, train.y);
      row.cutoff = roc.cutoff;
      row.train_accuracy = roc.accuracy;
      row.train_auc = roc.auc;
      row.loglik = mf.loglik;
      row.bic = -2.0 * mf.loglik +
                (dtrain.m() + 1) * std::log(static_cast<double>(train.n()));

      const Dataset test_enc = reencode_with_schema(test, train.schema());
      Eigen::VectorXd eta_t = dtest.F * mf.beta;
      for (int i = 0; i < test_enc.n(); ++i) {
        const int g = test_enc.group[i];
        if (g >= 1 && g <= mf.b_hat.size()) eta_t[i] += mf.b_hat[g - 1];
      }
      Eigen::VectorXd scores_t(test_enc.n());
      kern::sigmoid_v(eta_t.data(), scores_t.data(),
                      static_cast<std::size_t>(test_enc.n()));
      row.test_accuracy = accuracy_at(scores_t, test_enc.y, row.cutoff);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    report.rows.push_back(row);
  }

  {
    BaselineRow row;
    row.method = "glm";
    try {
      const GlmFit gf = fit_logistic_glm(dtrain.F, train.y.cast<double>(), ones);
      Eigen::VectorXd eta = dtrain.F * gf.beta;
      Eigen::VectorXd scores(train.n());
      kern::sigmoid_v(eta.data(), scores.data(),
                      static_cast<std::size_t>(train.n()));
      const RocResult roc = roc_cutoff(scores, train.y);
      row.cutoff = roc.cutoff;
      row.train_accuracy = roc.accuracy;
      row.train_auc = roc.auc;
      row.loglik = gf.loglik;
      row.bic = -2.0 * gf.loglik +
                dtrain.m() * std::log(static_cast<double>(train.n()));

      Eigen::VectorXd eta_t = dtest.F * gf.beta;
      Eigen::VectorXd scores_t(eta_t.size());
      kern::sigmoid_v(eta_t.data(), scores_t.data(),
                      static_cast<std::size_t>(eta_t.size()));
      row.test_accuracy = accuracy_at(scores_t, test.y, row.cutoff);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    report.rows.push_back(row);
  }

  return report;
}

}  // namespace mlcwmd
