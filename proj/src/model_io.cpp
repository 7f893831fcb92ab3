#include "mlcwmd/model_io.hpp"

#include <fstream>
#include <sstream>

#include "mlcwmd/errors.hpp"

namespace mlcwmd {

namespace {

Json vec_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json ivec_to_json(const Eigen::VectorXi& v) {
  Json a = Json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (long i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (long j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::VectorXd vec_from_json(const Json& a) {
  Eigen::VectorXd v(static_cast<long>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<long>(i)] = a[i].get<double>();
  return v;
}

Eigen::VectorXi ivec_from_json(const Json& a) {
  Eigen::VectorXi v(static_cast<long>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<long>(i)] = a[i].get<int>();
  return v;
}

Eigen::MatrixXd mat_from_json(const Json& a) {
  const long rows = static_cast<long>(a.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const long cols = static_cast<long>(a[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

Json nan_safe(double v) {
  if (std::isfinite(v)) return Json(v);
  return Json(nullptr);
}

double nan_restore(const Json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

Json vec_to_json_nan(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(nan_safe(v[i]));
  return a;
}

Eigen::VectorXd vec_from_json_nan(const Json& a) {
  Eigen::VectorXd v(static_cast<long>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    v[static_cast<long>(i)] = nan_restore(a[i]);
  }
  return v;
}

Json schema_to_json(const DataSchema& s) {
  Json j;
  j["response"] = s.y_name;
  j["group"] = s.group_name;
  j["continuous"] = s.u_names;
  j["categorical"] = s.v_names;
  Json codecs = Json::array();
  for (const auto& c : s.v_codecs) codecs.push_back(c.levels);
  j["categorical_levels"] = std::move(codecs);
  j["dichotomous"] = s.d_names;
  j["ising_domain"] = to_string(s.d_domain);
  j["fixed_only"] = s.extra_names;
  j["group_levels"] = s.group_levels;
  return j;
}

DataSchema schema_from_json(const Json& j) {
  DataSchema s;
  s.y_name = j.at("response").get<std::string>();
  s.group_name = j.at("group").get<std::string>();
  s.u_names = j.at("continuous").get<std::vector<std::string>>();
  s.v_names = j.at("categorical").get<std::vector<std::string>>();
  for (const auto& levels : j.at("categorical_levels")) {
    CategoricalCodec c;
    c.levels = levels.get<std::vector<std::string>>();
    s.v_codecs.push_back(std::move(c));
  }
  s.d_names = j.at("dichotomous").get<std::vector<std::string>>();
  s.d_domain = ising_domain_from_string(j.at("ising_domain").get<std::string>());
  s.extra_names = j.at("fixed_only").get<std::vector<std::string>>();
  s.group_levels = j.at("group_levels").get<std::vector<std::string>>();
  return s;
}

}  // namespace

Json model_fit_to_json(const ModelFit& fit) {
  Json j;
  j["schema_version"] = k_fit_schema_version;
  j["tool_version"] = k_tool_version;

  Json model;
  model["n_clusters"] = fit.n_clusters;
  model["variant"] = to_string(fit.variant);
  model["ising_domain"] = to_string(fit.d_domain);
  model["formula"] = fit.formula;
  model["intercept"] = fit.intercept;
  model["regression_likelihood"] = to_string(fit.reg_likelihood);
  model["design_columns"] = fit.design_names;
  j["model"] = std::move(model);

  Json comps = Json::array();
  for (const auto& cp : fit.components) {
    Json c;
    c["weight"] = cp.w;
    c["beta"] = vec_to_json(cp.beta);
    c["beta_se"] = vec_to_json_nan(cp.beta_se);
    c["beta_p"] = vec_to_json_nan(cp.beta_p);
    c["sigma_b"] = cp.sigma_b;
    c["b_hat"] = vec_to_json(cp.b_hat);
    c["b_sd"] = vec_to_json(cp.b_sd);
    c["mu"] = vec_to_json(cp.mu);
    c["sigma"] = mat_to_json(cp.sigma);
    Json lam = Json::array();
    for (const auto& l : cp.lambda) lam.push_back(vec_to_json(l));
    c["lambda"] = std::move(lam);
    if (!cp.lambda_d.empty()) {
      Json lam_d = Json::array();
      for (const auto& l : cp.lambda_d) lam_d.push_back(vec_to_json(l));
      c["lambda_d"] = std::move(lam_d);
    }
    if (cp.ising.h() > 0) {
      c["ising_nu"] = vec_to_json(cp.ising.nu());
      c["ising_gamma"] = mat_to_json(cp.ising.gamma());
    }
    c["regression_converged"] = cp.reg_converged;
    c["regression_separation"] = cp.reg_separation;
    c["ising_frozen"] = cp.ising_frozen;
    c["sigma_ridge_used"] = cp.ridge_used;
    comps.push_back(std::move(c));
  }
  j["components"] = std::move(comps);

  j["loglik"] = fit.loglik;
  j["objective"] = fit.objective;
  j["bic"] = fit.bic;
  j["k_params"] = fit.k_params;
  j["trace"] = fit.trace;
  j["seed"] = fit.seed;
  j["start_index"] = fit.start_index;
  j["iterations"] = fit.n_iterations;
  j["best_iteration"] = fit.best_iteration;
  j["converged"] = fit.converged;
  j["nonmonotone_steps"] = fit.nonmonotone_steps;
  j["assignments"] = ivec_to_json(fit.z);
  j["tau"] = mat_to_json(fit.tau);
  j["data_schema"] = schema_to_json(fit.schema);
  j["train_cutoff"] = fit.train_cutoff;
  j["train_accuracy"] = fit.train_accuracy;
  j["train_auc"] = fit.train_auc;
  return j;
}

ModelFit model_fit_from_json(const Json& j) {
  const std::string ver = j.at("schema_version").get<std::string>();
  const std::string major = ver.substr(0, ver.find('.'));
  if (major != "1") {
    throw DataError("fit document schema_version '" + ver +
                    "' is not supported (want major 1)");
  }

  ModelFit fit;
  const Json& model = j.at("model");
  fit.n_clusters = model.at("n_clusters").get<int>();
  fit.variant = model.at("variant").get<std::string>() == "ising"
                    ? DVariant::ising
                    : DVariant::independent;
  fit.d_domain =
      ising_domain_from_string(model.at("ising_domain").get<std::string>());
  fit.formula = model.at("formula").get<std::vector<std::string>>();
  fit.intercept = model.at("intercept").get<bool>();
  fit.reg_likelihood =
      model.at("regression_likelihood").get<std::string>() == "marginal"
          ? RegLikelihood::marginal
          : RegLikelihood::conditional;
  fit.design_names = model.at("design_columns").get<std::vector<std::string>>();

  for (const auto& c : j.at("components")) {
    ClusterParams cp;
    cp.w = c.at("weight").get<double>();
    cp.beta = vec_from_json(c.at("beta"));
    cp.beta_se = vec_from_json_nan(c.at("beta_se"));
    cp.beta_p = vec_from_json_nan(c.at("beta_p"));
    cp.sigma_b = c.at("sigma_b").get<double>();
    cp.b_hat = vec_from_json(c.at("b_hat"));
    cp.b_sd = vec_from_json(c.at("b_sd"));
    cp.mu = vec_from_json(c.at("mu"));
    cp.sigma = mat_from_json(c.at("sigma"));
    for (const auto& l : c.at("lambda")) cp.lambda.push_back(vec_from_json(l));
    if (c.contains("lambda_d")) {
      for (const auto& l : c.at("lambda_d")) {
        cp.lambda_d.push_back(vec_from_json(l));
      }
    }
    if (c.contains("ising_nu")) {
      cp.ising = IsingModel(vec_from_json(c.at("ising_nu")),
                            mat_from_json(c.at("ising_gamma")), fit.d_domain);
    }
    cp.reg_converged = c.at("regression_converged").get<bool>();
    cp.reg_separation = c.at("regression_separation").get<bool>();
    cp.ising_frozen = c.at("ising_frozen").get<bool>();
    cp.ridge_used = c.at("sigma_ridge_used").get<double>();
    fit.components.push_back(std::move(cp));
  }

  fit.loglik = j.at("loglik").get<double>();
  fit.objective = j.at("objective").get<double>();
  fit.bic = j.at("bic").get<double>();
  fit.k_params = j.at("k_params").get<int>();
  fit.trace = j.at("trace").get<std::vector<double>>();
  fit.seed = j.at("seed").get<std::uint64_t>();
  fit.start_index = j.at("start_index").get<int>();
  fit.n_iterations = j.at("iterations").get<int>();
  fit.best_iteration = j.at("best_iteration").get<int>();
  fit.converged = j.at("converged").get<bool>();
  fit.nonmonotone_steps = j.at("nonmonotone_steps").get<int>();
  fit.z = ivec_from_json(j.at("assignments"));
  fit.tau = mat_from_json(j.at("tau"));
  fit.schema = schema_from_json(j.at("data_schema"));
  fit.train_cutoff = j.at("train_cutoff").get<double>();
  fit.train_accuracy = j.at("train_accuracy").get<double>();
  fit.train_auc = j.at("train_auc").get<double>();
  return fit;
}

void save_model_fit(const ModelFit& fit, const std::string& path) {
  write_json_file(model_fit_to_json(fit), path);
}

ModelFit load_model_fit(const std::string& path) {
  return model_fit_from_json(read_json_file(path));
}

Json fit_config_to_json(const FitConfig& cfg) {
  Json j;
  j["c_grid"] = cfg.c_grid;
  j["n_starts"] = cfg.n_starts;
  j["max_iter"] = cfg.max_iter;
  j["tol"] = cfg.tol;
  j["init"] = to_string(cfg.init);
  j["ising_domain"] = to_string(cfg.ising_domain);
  j["variant"] = to_string(cfg.variant);
  j["regression_likelihood"] = to_string(cfg.reg_likelihood);
  j["lambda_floor"] = cfg.lambda_floor;
  j["sigma_ridge"] = cfg.sigma_ridge;
  j["min_cluster_size"] = cfg.min_cluster_size;
  j["formula"] = cfg.formula;
  j["intercept"] = cfg.intercept;
  j["jobs"] = cfg.jobs;
  return j;
}

FitConfig fit_config_from_json(const Json& j) {
  FitConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "c_grid") cfg.c_grid = value.get<std::vector<int>>();
    else if (key == "n_starts") cfg.n_starts = value.get<int>();
    else if (key == "max_iter") cfg.max_iter = value.get<int>();
    else if (key == "tol") cfg.tol = value.get<double>();
    else if (key == "init") {
      const std::string s = value.get<std::string>();
      if (s == "random") cfg.init = InitStrategy::random;
      else if (s == "kmeans") cfg.init = InitStrategy::kmeans;
      else throw DataError("model.init must be random or kmeans, got '" + s + "'");
    } else if (key == "ising_domain") {
      cfg.ising_domain = ising_domain_from_string(value.get<std::string>());
    } else if (key == "variant") {
      const std::string s = value.get<std::string>();
      if (s == "ising") cfg.variant = DVariant::ising;
      else if (s == "independent" || s == "nod") cfg.variant = DVariant::independent;
      else throw DataError("model.variant must be ising or independent");
    } else if (key == "regression_likelihood") {
      const std::string s = value.get<std::string>();
      if (s == "conditional") cfg.reg_likelihood = RegLikelihood::conditional;
      else if (s == "marginal") cfg.reg_likelihood = RegLikelihood::marginal;
      else throw DataError("model.regression_likelihood must be conditional or marginal");
    } else if (key == "lambda_floor") cfg.lambda_floor = value.get<double>();
    else if (key == "sigma_ridge") cfg.sigma_ridge = value.get<double>();
    else if (key == "min_cluster_size") cfg.min_cluster_size = value.get<int>();
    else if (key == "formula") cfg.formula = value.get<std::vector<std::string>>();
    else if (key == "intercept") cfg.intercept = value.get<bool>();
    else if (key == "jobs") cfg.jobs = value.get<int>();
    else throw DataError("unknown model config key '" + key + "'");
  }
  if (cfg.tol <= 0) throw DataError("model.tol must be > 0");
  for (int c : cfg.c_grid) {
    if (c < 1) throw DataError("model.c_grid entries must be >= 1");
  }
  if (cfg.min_cluster_size < 0) throw DataError("model.min_cluster_size must be >= 1 (or 0 for auto)");
  return cfg;
}

Json ground_truth_to_json(const GroundTruth& gt) {
  Json j;
  j["w"] = vec_to_json(gt.w);
  j["n_groups"] = gt.n_groups;
  j["n_per_group"] = gt.n_per_group;
  j["ising_domain"] = to_string(gt.d_domain);
  j["categorical_levels"] = gt.v_levels;
  Json cl = Json::array();
  for (const auto& c : gt.clusters) {
    Json cj;
    cj["mu"] = vec_to_json(c.mu);
    cj["sigma"] = mat_to_json(c.sigma);
    Json lam = Json::array();
    for (const auto& l : c.lambda) lam.push_back(vec_to_json(l));
    cj["lambda"] = std::move(lam);
    cj["gamma"] = mat_to_json(c.gamma);
    cj["nu"] = vec_to_json(c.nu);
    cj["beta"] = vec_to_json(c.beta);
    cj["sigma_b"] = c.sigma_b;
    cl.push_back(std::move(cj));
  }
  j["clusters"] = std::move(cl);
  return j;
}

GroundTruth ground_truth_from_json(const Json& j) {
  GroundTruth gt;
  gt.w = vec_from_json(j.at("w"));
  gt.n_groups = j.at("n_groups").get<int>();
  gt.n_per_group = j.at("n_per_group").get<int>();
  gt.d_domain = ising_domain_from_string(j.at("ising_domain").get<std::string>());
  gt.v_levels = j.at("categorical_levels").get<std::vector<int>>();
  for (const auto& cj : j.at("clusters")) {
    ClusterTruth c;
    c.mu = vec_from_json(cj.at("mu"));
    c.sigma = mat_from_json(cj.at("sigma"));
    for (const auto& l : cj.at("lambda")) c.lambda.push_back(vec_from_json(l));
    c.gamma = mat_from_json(cj.at("gamma"));
    c.nu = vec_from_json(cj.at("nu"));
    c.beta = vec_from_json(cj.at("beta"));
    c.sigma_b = cj.at("sigma_b").get<double>();
    gt.clusters.push_back(std::move(c));
  }
  gt.check();
  return gt;
}

Json roles_to_json(const RoleMap& roles) {
  Json j;
  for (const auto& [name, role] : roles) j[name] = to_string(role);
  return j;
}

RoleMap roles_from_json(const Json& j) {
  RoleMap roles;
  for (const auto& [name, role] : j.items()) {
    roles[name] = role_from_string(role.get<std::string>());
  }
  return roles;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for digest");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + hex;
}

}  // namespace mlcwmd
