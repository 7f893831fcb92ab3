#include "mlcwmd/predict.hpp"

#include "mlcwmd/errors.hpp"

namespace mlcwmd {

std::string to_string(BMode m) {
  switch (m) {
    case BMode::group_or_zero: return "group";
    case BMode::zero: return "zero";
    case BMode::minus_sigma: return "minus_sigma";
    case BMode::plus_sigma: return "plus_sigma";
  }
  return "?";
}

BMode b_mode_from_string(const std::string& s) {
  if (s == "group") return BMode::group_or_zero;
  if (s == "zero") return BMode::zero;
  if (s == "minus_sigma" || s == "minus") return BMode::minus_sigma;
  if (s == "plus_sigma" || s == "plus") return BMode::plus_sigma;
  throw DataError("unknown b mode '" + s +
                  "' (group | zero | minus_sigma | plus_sigma)");
}

namespace {

std::vector<Prediction> predict_impl(const ModelFit& fit, const Dataset& ds,
                                     const Design& design, BMode mode) {
  const int C = fit.n_clusters;
  Eigen::VectorXd offsets(C);
  const Eigen::VectorXd* off_ptr = nullptr;
  if (mode != BMode::group_or_zero) {
    for (int c = 0; c < C; ++c) {
      const double s = fit.components[static_cast<std::size_t>(c)].sigma_b;
      offsets[c] = mode == BMode::zero ? 0.0
                   : mode == BMode::minus_sigma ? -s
                                                : s;
    }
    off_ptr = &offsets;
  }

  const Eigen::MatrixXd marg = marginal_log_mix(ds, fit.components, fit.variant);
  const Eigen::MatrixXd probs =
      conditional_event_probs(design, ds.group, fit.components, off_ptr);

  std::vector<Prediction> out(static_cast<std::size_t>(ds.n()));
  for (int i = 0; i < ds.n(); ++i) {
    Prediction& pr = out[static_cast<std::size_t>(i)];
    pr.b_mode = to_string(mode);
    pr.posterior.resize(C);
    pr.p_conditional = probs.row(i);
    const double mx = marg.row(i).maxCoeff();
    double denom = 0.0;
    for (int c = 0; c < C; ++c) {
      pr.posterior[c] = std::exp(marg(i, c) - mx);
      denom += pr.posterior[c];
    }
    pr.posterior /= denom;
    pr.p = pr.posterior.dot(pr.p_conditional);
  }
  return out;
}

}  // namespace

std::vector<Prediction> predict_rows(const ModelFit& fit, const Dataset& ds,
                                     BMode mode) {
  const Design design = build_design(ds, fit.formula, fit.intercept);
  return predict_impl(fit, ds, design, mode);
}

Eigen::VectorXd predict_score_vector(const ModelFit& fit, const Dataset& ds,
                                     BMode mode) {
  const auto preds = predict_rows(fit, ds, mode);
  Eigen::VectorXd out(static_cast<long>(preds.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out[static_cast<long>(i)] = preds[i].p;
  }
  return out;
}

std::vector<ScenarioCell> scenario_rows(const ModelFit& fit,
                                        const Dataset& ds) {
  const Design design = build_design(ds, fit.formula, fit.intercept);
  const auto lo = predict_impl(fit, ds, design, BMode::minus_sigma);
  const auto mid = predict_impl(fit, ds, design, BMode::zero);
  const auto hi = predict_impl(fit, ds, design, BMode::plus_sigma);
  std::vector<ScenarioCell> out(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    out[i] = ScenarioCell{lo[i], mid[i], hi[i]};
  }
  return out;
}

Eigen::MatrixXi flag_group_effects(const ModelFit& fit, double z) {
  const int J = static_cast<int>(fit.schema.group_levels.size());
  const int C = fit.n_clusters;
  Eigen::MatrixXi flags = Eigen::MatrixXi::Zero(J, C);
  for (int c = 0; c < C; ++c) {
    const auto& cp = fit.components[static_cast<std::size_t>(c)];
    for (int j = 0; j < J && j < cp.b_hat.size(); ++j) {
      const double lo = cp.b_hat[j] - z * cp.b_sd[j];
      const double hi = cp.b_hat[j] + z * cp.b_sd[j];
      if (lo > 0.0) flags(j, c) = 1;
      else if (hi < 0.0) flags(j, c) = -1;
    }
  }
  return flags;
}

}  // namespace mlcwmd
