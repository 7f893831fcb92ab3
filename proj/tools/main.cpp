// Batch front end: simulate | fit | select | predict | scenario |
// evaluate | reproduce-sim. One JSON config drives data and model
// settings; flags override; every run writes a manifest next to its
// outputs.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mlcwmd/baselines.hpp"
#include "mlcwmd/dgp.hpp"
#include "mlcwmd/em.hpp"
#include "mlcwmd/errors.hpp"
#include "mlcwmd/metrics.hpp"
#include "mlcwmd/model_io.hpp"
#include "mlcwmd/predict.hpp"
#include "mlcwmd/simstudy.hpp"

namespace fs = std::filesystem;
using namespace mlcwmd;

namespace {

struct Timings {
  std::vector<std::pair<std::string, double>> phases;
  std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();
  void lap(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    phases.emplace_back(name,
                        std::chrono::duration<double, std::milli>(now - mark)
                            .count());
    mark = now;
  }
};

struct Manifest {
  std::string command;
  Json config_echo = Json::object();
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  Timings timings;

  void add_input(const std::string& path) {
    inputs.emplace_back(path, file_digest(path));
  }
  void write(const std::string& dir) {
    Json j;
    j["tool"] = "mlcwmd";
    j["tool_version"] = k_tool_version;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config_echo;
    Json in = Json::array();
    for (const auto& [p, d] : inputs) in.push_back({{"path", p}, {"digest", d}});
    j["inputs"] = std::move(in);
    j["outputs"] = outputs;
    j["warnings"] = warnings;
    Json t = Json::object();
    for (const auto& [name, ms] : timings.phases) t[name] = ms;
    j["timings_ms"] = std::move(t);
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    j["timestamp_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    write_json_file(j, dir + "/manifest.json");
  }
};

std::string out_dir_or_env(std::string dir) {
  if (const char* env = std::getenv("MLCWMD_OUT"); env && dir.empty()) {
    dir = env;
  }
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  return dir;
}

std::vector<int> parse_c_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw DataError("empty cluster list '" + s + "'");
  return out;
}

RoleMap dgp_roles(const Dataset& ds) {
  RoleMap roles{{ds.y_name, ColumnRole::response},
                {ds.group_name, ColumnRole::group},
                {"true_cluster", ColumnRole::ignore}};
  for (const auto& nm : ds.u_names) roles[nm] = ColumnRole::continuous;
  for (const auto& nm : ds.v_names) roles[nm] = ColumnRole::categorical;
  for (const auto& nm : ds.d_names) roles[nm] = ColumnRole::dichotomous;
  return roles;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& out, const std::string& dgp_name,
                 const std::string& truth_path, std::uint64_t seed, int reps,
                 int n_test) {
  const std::string dir = out_dir_or_env(out);
  Manifest man;
  man.command = "simulate";
  man.seed = seed;

  GroundTruth gt;
  if (!truth_path.empty()) {
    man.add_input(truth_path);
    gt = ground_truth_from_json(read_json_file(truth_path));
  } else if (dgp_name == "table1") {
    gt = builtin_table1();
  } else {
    throw DataError("unknown --dgp '" + dgp_name + "' (have: table1)");
  }
  man.config_echo = {{"dgp", dgp_name}, {"reps", reps}, {"n_test", n_test}};
  man.timings.lap("setup");

  write_json_file(ground_truth_to_json(gt), dir + "/truth.json");
  man.outputs.push_back(dir + "/truth.json");

  for (int r = 1; r <= reps; ++r) {
    Rng rng_train(derive_seed(seed, 2 * static_cast<std::uint64_t>(r)));
    Rng rng_test(derive_seed(seed, 2 * static_cast<std::uint64_t>(r) + 1));
    const GeneratedData train = generate(gt, rng_train);
    const GeneratedData test = generate_test_split(gt, n_test, rng_test);

    const std::string train_path = dir + "/train_" + std::to_string(r) + ".csv";
    const std::string test_path = dir + "/test_" + std::to_string(r) + ".csv";
    save_dataset_csv(train.ds, train_path, &train.labels);
    save_dataset_csv(test.ds, test_path, &test.labels);
    man.outputs.push_back(train_path);
    man.outputs.push_back(test_path);

    Json cfg;
    cfg["data"] = {{"path", train_path},
                   {"roles", roles_to_json(dgp_roles(train.ds))},
                   {"ising_domain", to_string(gt.d_domain)}};
    Json model;
    model["c_grid"] = Json::array({2, 3, 4});
    model["n_starts"] = 5;
    model["init"] = "kmeans";
    model["intercept"] = false;
    std::vector<std::string> formula;
    for (const auto& nm : train.ds.u_names) formula.push_back(nm);
    for (const auto& nm : train.ds.v_names) formula.push_back(nm);
    for (const auto& nm : train.ds.d_names) formula.push_back(nm);
    model["formula"] = formula;
    cfg["model"] = std::move(model);
    cfg["output"] = {{"dir", dir + "/fit_" + std::to_string(r)}};
    cfg["seed"] = derive_seed(seed, 1000 + static_cast<std::uint64_t>(r));
    const std::string cfg_path = dir + "/config_" + std::to_string(r) + ".json";
    write_json_file(cfg, cfg_path);
    man.outputs.push_back(cfg_path);
  }
  man.timings.lap("generate");
  man.write(dir);
  std::cout << "simulate: wrote " << reps << " replicate pair(s) under " << dir
            << "\n";
  return 0;
}

// --------------------------------------------------------------- fit/select

struct RunSpec {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  FitConfig cfg;
  RoleMap roles;
  IsingDomain domain = IsingDomain::zero_one;
  Json config_echo;
  bool have_seed_override = false;
  std::uint64_t seed_override = 0;
  std::vector<int> c_override;
  int starts_override = 0;
  int jobs_override = 0;
};

Dataset load_run_dataset(RunSpec& spec, Manifest& man) {
  if (!spec.config_path.empty()) {
    man.add_input(spec.config_path);
    const Json j = read_json_file(spec.config_path);
    spec.config_echo = j;
    if (j.contains("data")) {
      const Json& d = j.at("data");
      if (spec.data_path.empty() && d.contains("path")) {
        spec.data_path = d.at("path").get<std::string>();
      }
      if (d.contains("roles")) spec.roles = roles_from_json(d.at("roles"));
      if (d.contains("ising_domain")) {
        spec.domain =
            ising_domain_from_string(d.at("ising_domain").get<std::string>());
      }
    }
    if (j.contains("model")) spec.cfg = fit_config_from_json(j.at("model"));
    if (j.contains("seed")) spec.cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output") && j.at("output").contains("dir") &&
        spec.out_dir.empty()) {
      spec.out_dir = j.at("output").at("dir").get<std::string>();
    }
  }
  if (spec.have_seed_override) spec.cfg.seed = spec.seed_override;
  if (!spec.c_override.empty()) spec.cfg.c_grid = spec.c_override;
  if (spec.starts_override > 0) spec.cfg.n_starts = spec.starts_override;
  if (spec.jobs_override > 0) spec.cfg.jobs = spec.jobs_override;
  if (spec.data_path.empty()) {
    throw DataError("no data file (use --data or config data.path)");
  }
  if (spec.roles.empty()) {
    throw DataError("no column roles (config data.roles)");
  }
  spec.cfg.ising_domain = spec.domain;
  man.add_input(spec.data_path);
  man.seed = spec.cfg.seed;
  return load_dataset(spec.data_path, spec.roles, spec.domain);
}

void write_starts_csv(const SelectResult& sel, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "c,start,seed,status,loglik,bic,iterations,error\n";
  for (const auto& s : sel.starts) {
    std::string err = s.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << s.n_clusters << ',' << s.start << ',' << s.seed << ','
        << (s.ok ? "ok" : "failed") << ',' << s.loglik << ',' << s.bic << ','
        << s.iterations << ',' << err << '\n';
  }
}

int cmd_fit_or_select(RunSpec spec, bool select_mode) {
  Manifest man;
  man.command = select_mode ? "select" : "fit";
  const Dataset ds = load_run_dataset(spec, man);
  if (!select_mode && spec.cfg.c_grid.size() != 1) {
    throw DataError("fit needs a single cluster count (--c N); "
                    "use select for a grid");
  }
  const std::string dir = out_dir_or_env(spec.out_dir);
  man.config_echo = spec.config_echo.is_null() ? Json::object()
                                               : spec.config_echo;
  man.config_echo["model_effective"] = fit_config_to_json(spec.cfg);
  man.timings.lap("load");

  const SelectResult sel = fit_select(ds, spec.cfg);
  man.timings.lap("fit");

  {
    Json j = model_fit_to_json(sel.best);
    j["config"] = fit_config_to_json(spec.cfg);
    write_json_file(j, dir + "/fit.json");
  }
  man.outputs.push_back(dir + "/fit.json");
  write_starts_csv(sel, dir + "/starts.csv");
  man.outputs.push_back(dir + "/starts.csv");

  {
    std::ofstream out(dir + "/bic_table.csv");
    out.precision(17);
    out << "c,status,loglik,k_params,bic,failed_starts,best_start\n";
    for (const auto& row : sel.table) {
      out << row.n_clusters << ',' << (row.ok ? "ok" : "failed") << ','
          << row.loglik << ',' << row.k_params << ',' << row.bic << ','
          << row.n_failed_starts << ',' << row.best_start << '\n';
    }
    man.outputs.push_back(dir + "/bic_table.csv");
  }

  for (const auto& row : sel.table) {
    if (!row.ok) {
      man.warnings.push_back("C=" + std::to_string(row.n_clusters) +
                             ": every start failed");
    }
  }
  man.timings.lap("write");
  man.write(dir);

  std::cout << (select_mode ? "select" : "fit") << ": best C="
            << sel.best.n_clusters << " loglik=" << sel.best.loglik
            << " bic=" << sel.best.bic << " -> " << dir << "/fit.json\n";
  return 0;
}

// ------------------------------------------------- predict/scenario/evaluate

Json prediction_json(const Prediction& p) {
  Json j;
  j["p"] = p.p;
  Json post = Json::array(), cond = Json::array();
  for (long c = 0; c < p.posterior.size(); ++c) {
    post.push_back(p.posterior[c]);
    cond.push_back(p.p_conditional[c]);
  }
  j["posterior"] = std::move(post);
  j["p_conditional"] = std::move(cond);
  j["b_mode"] = p.b_mode;
  return j;
}

int cmd_predict(const std::string& fit_path, const std::string& data_path,
                const std::string& out, const std::string& b_mode_name) {
  Manifest man;
  man.command = "predict";
  man.add_input(fit_path);
  man.add_input(data_path);
  const ModelFit fit = load_model_fit(fit_path);
  const Dataset ds = load_dataset_with_schema(data_path, fit.schema);
  const std::string dir = out_dir_or_env(out);
  man.config_echo = {{"fit", fit_path}, {"data", data_path},
                     {"b_mode", b_mode_name}};
  man.timings.lap("load");

  const BMode mode = b_mode_from_string(b_mode_name);
  const auto preds = predict_rows(fit, ds, mode);
  man.timings.lap("predict");

  {
    std::ofstream out_csv(dir + "/predictions.csv");
    out_csv.precision(17);
    out_csv << "row,p";
    for (int c = 1; c <= fit.n_clusters; ++c) {
      out_csv << ",posterior_" << c << ",p_conditional_" << c;
    }
    out_csv << "\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
      out_csv << (i + 1) << ',' << preds[i].p;
      for (int c = 0; c < fit.n_clusters; ++c) {
        out_csv << ',' << preds[i].posterior[c] << ','
                << preds[i].p_conditional[c];
      }
      out_csv << '\n';
    }
    man.outputs.push_back(dir + "/predictions.csv");
  }
  {
    Json rows = Json::array();
    for (const auto& p : preds) rows.push_back(prediction_json(p));
    Json j;
    j["n"] = preds.size();
    j["predictions"] = std::move(rows);
    write_json_file(j, dir + "/predictions.json");
    man.outputs.push_back(dir + "/predictions.json");
  }
  man.timings.lap("write");
  man.write(dir);
  std::cout << "predict: " << preds.size() << " rows -> " << dir << "\n";
  return 0;
}

int cmd_scenario(const std::string& fit_path, const std::string& data_path,
                 const std::string& out) {
  Manifest man;
  man.command = "scenario";
  man.add_input(fit_path);
  man.add_input(data_path);
  const ModelFit fit = load_model_fit(fit_path);
  const Dataset ds = load_dataset_with_schema(data_path, fit.schema);
  const std::string dir = out_dir_or_env(out);
  man.config_echo = {{"fit", fit_path}, {"data", data_path}};
  man.timings.lap("load");

  const auto cells = scenario_rows(fit, ds);
  man.timings.lap("predict");
  {
    std::ofstream csv(dir + "/scenario.csv");
    csv.precision(17);
    csv << "row,p_minus_sigma,p_zero,p_plus_sigma\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      csv << (i + 1) << ',' << cells[i].at_minus.p << ',' << cells[i].at_zero.p
          << ',' << cells[i].at_plus.p << '\n';
    }
    man.outputs.push_back(dir + "/scenario.csv");
  }
  {
    Json rows = Json::array();
    for (const auto& c : cells) {
      Json j;
      j["minus_sigma"] = prediction_json(c.at_minus);
      j["zero"] = prediction_json(c.at_zero);
      j["plus_sigma"] = prediction_json(c.at_plus);
      rows.push_back(std::move(j));
    }
    Json j;
    j["n"] = cells.size();
    j["scenarios"] = std::move(rows);
    write_json_file(j, dir + "/scenario.json");
    man.outputs.push_back(dir + "/scenario.json");
  }
  man.timings.lap("write");
  man.write(dir);
  std::cout << "scenario: " << cells.size() << " patients x 3 modes -> " << dir
            << "\n";
  return 0;
}

// named integer column straight from a csv, for truth labels
std::vector<int> read_int_column(const std::string& path,
                                 const std::string& col) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string name;
  int idx = -1, k = 0;
  while (std::getline(hs, name, ',')) {
    if (name == col) idx = k;
    ++k;
  }
  if (idx < 0) throw DataError("column '" + col + "' not in '" + path + "'");
  std::vector<int> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    for (int i = 0; i <= idx; ++i) std::getline(ls, cell, ',');
    out.push_back(std::stoi(cell));
  }
  return out;
}

int cmd_evaluate(const std::string& fit_path, const std::string& data_path,
                 const std::string& out, const std::string& cluster_col) {
  Manifest man;
  man.command = "evaluate";
  man.add_input(fit_path);
  man.add_input(data_path);
  const ModelFit fit = load_model_fit(fit_path);
  const Dataset ds = load_dataset_with_schema(data_path, fit.schema);
  if (!ds.has_response) {
    throw DataError("evaluate needs the response column '" +
                    fit.schema.y_name + "' in '" + data_path + "'");
  }
  const std::string dir = out_dir_or_env(out);
  man.config_echo = {{"fit", fit_path}, {"data", data_path},
                     {"cluster_col", cluster_col}};
  man.timings.lap("load");

  const Eigen::VectorXd scores =
      predict_score_vector(fit, ds, BMode::group_or_zero);
  const double acc = accuracy_at(scores, ds.y, fit.train_cutoff);
  const RocResult roc = roc_cutoff(scores, ds.y);
  man.timings.lap("score");

  Json j;
  j["n"] = ds.n();
  j["cutoff"] = fit.train_cutoff;
  j["accuracy_at_fit_cutoff"] = acc;
  j["auc"] = roc.auc;
  j["youden_cutoff_here"] = roc.cutoff;
  j["accuracy_at_youden_here"] = roc.accuracy;

  if (!cluster_col.empty()) {
    const std::vector<int> truth = read_int_column(data_path, cluster_col);
    if (static_cast<int>(truth.size()) != ds.n()) {
      throw DataError("cluster column length mismatch");
    }
    const Design design = build_design(ds, fit.formula, fit.intercept);
    const Eigen::MatrixXd dens =
        component_log_densities(ds, design, fit.components, fit.variant,
                                fit.reg_likelihood);
    const Eigen::VectorXi z = hard_assign(e_step(dens));
    Eigen::VectorXi t(ds.n());
    for (int i = 0; i < ds.n(); ++i) t[i] = truth[static_cast<std::size_t>(i)];
    j["ari"] = adjusted_rand_index(z, t);
    Json zs = Json::array();
    for (int i = 0; i < ds.n(); ++i) zs.push_back(z[i]);
    j["assignments"] = std::move(zs);
  }
  write_json_file(j, dir + "/evaluation.json");
  man.outputs.push_back(dir + "/evaluation.json");
  man.timings.lap("write");
  man.write(dir);
  std::cout << "evaluate: accuracy " << acc << " auc " << roc.auc << " -> "
            << dir << "/evaluation.json\n";
  return 0;
}

// ------------------------------------------------------------ reproduce-sim

void append_metric(std::ofstream& csv, int rep, const std::string& method,
                   const std::string& metric, double value) {
  csv << rep << ',' << method << ',' << metric << ',' << value << '\n';
}

int cmd_reproduce_sim(const std::string& out, int reps, std::uint64_t seed,
                      int n_starts, const std::string& c_list, int jobs,
                      const std::string& init_name, int n_test) {
  const std::string dir = out_dir_or_env(out);
  Manifest man;
  man.command = "reproduce-sim";
  man.seed = seed;

  SimStudyOptions opts;
  opts.replicates = reps;
  opts.seed = seed;
  opts.n_starts = n_starts;
  opts.c_grid = parse_c_list(c_list);
  opts.jobs = jobs;
  opts.n_test = n_test;
  if (init_name == "random") opts.init = InitStrategy::random;
  else if (init_name == "kmeans") opts.init = InitStrategy::kmeans;
  else throw DataError("--init must be random or kmeans");

  man.config_echo = {{"reps", reps},     {"n_starts", n_starts},
                     {"c_grid", c_list}, {"jobs", jobs},
                     {"init", init_name}, {"n_test", n_test}};
  man.timings.lap("setup");

  const SimStudyResult res = run_sim_study(builtin_table1(), opts);
  man.timings.lap("study");

  std::ofstream csv(dir + "/metrics.csv");
  csv.precision(17);
  csv << "replicate,method,metric,value\n";
  auto dump_method = [&](int rep, const std::string& name,
                         const MethodMetrics& mm, bool mixture) {
    if (!mm.ok) return;
    if (mixture) {
      append_metric(csv, rep, name, "selected_c", mm.selected_c);
      append_metric(csv, rep, name, "ari", mm.ari);
    }
    append_metric(csv, rep, name, "bic", mm.bic);
    append_metric(csv, rep, name, "loglik", mm.loglik);
    append_metric(csv, rep, name, "train_accuracy", mm.train_accuracy);
    append_metric(csv, rep, name, "test_accuracy", mm.test_accuracy);
    append_metric(csv, rep, name, "train_auc", mm.train_auc);
    append_metric(csv, rep, name, "cutoff", mm.cutoff);
  };
  for (const auto& r : res.replicates) {
    dump_method(r.replicate, "ml-cwmd", r.cwmd, true);
    dump_method(r.replicate, "ml-cwmd-nod", r.cwmd_nod, true);
    dump_method(r.replicate, "glmer", r.glmer, false);
    dump_method(r.replicate, "glm", r.glm, false);
    for (const auto& row : r.table_full) {
      if (row.ok) {
        append_metric(csv, r.replicate, "ml-cwmd",
                      "bic_c" + std::to_string(row.n_clusters), row.bic);
      }
    }
    for (const auto& row : r.table_nod) {
      if (row.ok) {
        append_metric(csv, r.replicate, "ml-cwmd-nod",
                      "bic_c" + std::to_string(row.n_clusters), row.bic);
      }
    }
    for (int c = 0; c < r.beta_recovery.rows(); ++c) {
      for (long k = 0; k < r.beta_recovery.cols(); ++k) {
        append_metric(csv, r.replicate, "ml-cwmd",
                      "beta_c" + std::to_string(c + 1) + "[" +
                          res.design_names[static_cast<std::size_t>(k)] + "]",
                      r.beta_recovery(c, k));
      }
    }
    for (long k = 0; k < r.beta_glm.size(); ++k) {
      append_metric(csv, r.replicate, "glm",
                    "beta[" + res.design_names[static_cast<std::size_t>(k)] + "]",
                    r.beta_glm[k]);
    }
    append_metric(csv, r.replicate, "engine", "min_trace_delta",
                  r.min_trace_delta);
    append_metric(csv, r.replicate, "engine", "seconds", r.elapsed_seconds);
  }
  man.outputs.push_back(dir + "/metrics.csv");

  // summary: selection rate, medians, coefficient recovery
  auto median_of = [](std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  Json summary;
  int sel3 = 0, ok_full = 0;
  std::vector<double> ari_f, ari_n, tr_f, tr_n, tr_ge, tr_gl, te_f, te_n,
      te_ge, te_gl;
  Eigen::MatrixXd beta_sum =
      Eigen::MatrixXd::Zero(res.beta_truth.rows(), res.beta_truth.cols());
  int n_rec = 0;
  Eigen::VectorXd glm_sum = Eigen::VectorXd::Zero(res.beta_truth.cols());
  int n_glm = 0;
  double min_delta = std::numeric_limits<double>::infinity();
  for (const auto& r : res.replicates) {
    if (r.cwmd.ok) {
      ++ok_full;
      if (r.cwmd.selected_c == 3) ++sel3;
      ari_f.push_back(r.cwmd.ari);
      tr_f.push_back(r.cwmd.train_accuracy);
      te_f.push_back(r.cwmd.test_accuracy);
    }
    if (r.cwmd_nod.ok) {
      ari_n.push_back(r.cwmd_nod.ari);
      tr_n.push_back(r.cwmd_nod.train_accuracy);
      te_n.push_back(r.cwmd_nod.test_accuracy);
    }
    if (r.glmer.ok) {
      tr_ge.push_back(r.glmer.train_accuracy);
      te_ge.push_back(r.glmer.test_accuracy);
    }
    if (r.glm.ok) {
      tr_gl.push_back(r.glm.train_accuracy);
      te_gl.push_back(r.glm.test_accuracy);
    }
    if (r.beta_recovery.size() > 0) {
      beta_sum += r.beta_recovery;
      ++n_rec;
    }
    if (r.beta_glm.size() > 0) {
      glm_sum += r.beta_glm;
      ++n_glm;
    }
    min_delta = std::min(min_delta, r.min_trace_delta);
  }
  summary["replicates"] = reps;
  summary["full_model_ok"] = ok_full;
  summary["selected_c3_rate"] =
      ok_full > 0 ? static_cast<double>(sel3) / ok_full : 0.0;
  summary["median_ari"] = {{"ml-cwmd", median_of(ari_f)},
                           {"ml-cwmd-nod", median_of(ari_n)}};
  summary["median_train_accuracy"] = {{"ml-cwmd", median_of(tr_f)},
                                      {"ml-cwmd-nod", median_of(tr_n)},
                                      {"glmer", median_of(tr_ge)},
                                      {"glm", median_of(tr_gl)}};
  summary["median_test_accuracy"] = {{"ml-cwmd", median_of(te_f)},
                                     {"ml-cwmd-nod", median_of(te_n)},
                                     {"glmer", median_of(te_ge)},
                                     {"glm", median_of(te_gl)}};
  summary["min_trace_delta"] = min_delta;
  if (n_rec > 0) {
    const Eigen::MatrixXd beta_mean = beta_sum / n_rec;
    Json rec = Json::array();
    for (int c = 0; c < beta_mean.rows(); ++c) {
      for (long k = 0; k < beta_mean.cols(); ++k) {
        Json row;
        row["cluster"] = c + 1;
        row["coefficient"] = res.design_names[static_cast<std::size_t>(k)];
        row["truth"] = res.beta_truth(c, k);
        row["mean_estimate"] = beta_mean(c, k);
        if (n_glm > 0) row["glm_mean_estimate"] = glm_sum[k] / n_glm;
        rec.push_back(std::move(row));
      }
    }
    summary["coefficient_recovery"] = std::move(rec);
  }
  write_json_file(summary, dir + "/summary.json");
  man.outputs.push_back(dir + "/summary.json");
  man.timings.lap("write");
  man.write(dir);
  std::cout << "reproduce-sim: " << reps << " replicates -> " << dir
            << " (C=3 rate "
            << summary["selected_c3_rate"].get<double>() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilevel logistic cluster-weighted model toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic datasets");
  std::string sim_out, sim_dgp = "table1", sim_truth;
  std::uint64_t sim_seed = 1;
  int sim_reps = 1, sim_ntest = 200;
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--dgp", sim_dgp, "built-in generator name (table1)");
  sim->add_option("--truth", sim_truth, "ground-truth JSON file");
  sim->add_option("--seed", sim_seed, "seed");
  sim->add_option("--reps", sim_reps, "replicate pairs to write");
  sim->add_option("--n-test", sim_ntest, "test rows per replicate");

  // fit / select
  RunSpec spec;
  std::string run_c;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", spec.config_path, "JSON config file");
    cmd->add_option("--data", spec.data_path, "data CSV (overrides config)");
    cmd->add_option("--out", spec.out_dir, "output directory");
    cmd->add_option("--c", run_c, "cluster count(s), comma separated");
    cmd->add_option("--seed", spec.seed_override, "seed override")
        ->each([&](const std::string&) { spec.have_seed_override = true; });
    cmd->add_option("--starts", spec.starts_override, "random restarts per C");
    cmd->add_option("--jobs", spec.jobs_override, "parallel start tasks");
  };
  auto* fit_cmd = app.add_subcommand("fit", "fit at a fixed cluster count");
  add_run_options(fit_cmd);
  auto* sel_cmd = app.add_subcommand("select", "fit a C grid, pick by BIC");
  add_run_options(sel_cmd);

  // predict / scenario / evaluate
  std::string pr_fit, pr_data, pr_out, pr_bmode = "group", ev_cluster_col;
  auto* pred = app.add_subcommand("predict", "score new observations");
  pred->add_option("--fit", pr_fit, "fit JSON")->required();
  pred->add_option("--data", pr_data, "data CSV")->required();
  pred->add_option("--out", pr_out, "output directory");
  pred->add_option("--b-mode", pr_bmode,
                   "random-intercept mode: group|zero|minus|plus");
  auto* scen = app.add_subcommand("scenario",
                                  "predictions at -sigma, 0, +sigma");
  scen->add_option("--fit", pr_fit, "fit JSON")->required();
  scen->add_option("--data", pr_data, "patients CSV")->required();
  scen->add_option("--out", pr_out, "output directory");
  auto* eval = app.add_subcommand("evaluate", "accuracy/AUC and optional ARI");
  eval->add_option("--fit", pr_fit, "fit JSON")->required();
  eval->add_option("--data", pr_data, "labeled data CSV")->required();
  eval->add_option("--out", pr_out, "output directory");
  eval->add_option("--cluster-col", ev_cluster_col,
                   "true cluster column for ARI");

  // reproduce-sim
  auto* rep = app.add_subcommand("reproduce-sim",
                                 "replicated benchmark study");
  std::string rs_out, rs_c = "2,3,4", rs_init = "kmeans";
  std::uint64_t rs_seed = 20260808;
  int rs_reps = 20, rs_starts = 5, rs_jobs = 1, rs_ntest = 200;
  rep->add_option("--out", rs_out, "output directory");
  rep->add_option("--reps", rs_reps, "replicates");
  rep->add_option("--seed", rs_seed, "seed");
  rep->add_option("--starts", rs_starts, "starts per C");
  rep->add_option("--c", rs_c, "cluster grid");
  rep->add_option("--jobs", rs_jobs, "parallel replicates");
  rep->add_option("--init", rs_init, "random|kmeans");
  rep->add_option("--n-test", rs_ntest, "test rows per replicate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_out, sim_dgp, sim_truth, sim_seed, sim_reps,
                          sim_ntest);
    }
    if (fit_cmd->parsed() || sel_cmd->parsed()) {
      if (!run_c.empty()) spec.c_override = parse_c_list(run_c);
      const bool select_mode = sel_cmd->parsed();
      if (!select_mode && spec.c_override.size() > 1) {
        throw DataError("fit takes a single --c; use select for a grid");
      }
      return cmd_fit_or_select(std::move(spec), select_mode);
    }
    if (pred->parsed()) return cmd_predict(pr_fit, pr_data, pr_out, pr_bmode);
    if (scen->parsed()) return cmd_scenario(pr_fit, pr_data, pr_out);
    if (eval->parsed()) {
      return cmd_evaluate(pr_fit, pr_data, pr_out, ev_cluster_col);
    }
    if (rep->parsed()) {
      return cmd_reproduce_sim(rs_out, rs_reps, rs_seed, rs_starts, rs_c,
                               rs_jobs, rs_init, rs_ntest);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
