// End-to-end runs of the installed binary: simulate -> select -> predict /
// scenario / evaluate, format and determinism checks.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlcwmd/model_io.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string cli_path() {
  if (const char* env = std::getenv("MLCWMD_CLI")) return env;
  return fs::absolute("tools/mlcwmd").string();  // run from the build dir
}

struct Sandbox {
  fs::path root;
  Sandbox() {
    root = fs::temp_directory_path() /
           ("mlcwmd_cli_" + std::to_string(::getpid()));
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }
  std::string dir(const std::string& name) const {
    return (root / name).string();
  }
};

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}


long count_lines(const std::string& path) {
  std::ifstream in(path);
  long n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("simulate writes the documented replicate pair") {
  Sandbox sb;
  const std::string out = sb.dir("sim");
  REQUIRE(run("simulate --dgp table1 --seed 7 --out " + out) == 0);
  CHECK(count_lines(out + "/train_1.csv") == 2001);  // header + 2000 rows
  CHECK(count_lines(out + "/test_1.csv") == 201);
  CHECK(fs::exists(out + "/truth.json"));
  CHECK(fs::exists(out + "/config_1.json"));
  CHECK(fs::exists(out + "/manifest.json"));

  SUBCASE("identical invocation reproduces identical bytes") {
    const std::string out2 = sb.dir("sim2");
    REQUIRE(run("simulate --dgp table1 --seed 7 --out " + out2) == 0);
    CHECK(mlcwmd::file_digest(out + "/train_1.csv") ==
          mlcwmd::file_digest(out2 + "/train_1.csv"));
    CHECK(mlcwmd::file_digest(out + "/test_1.csv") ==
          mlcwmd::file_digest(out2 + "/test_1.csv"));
  }

  SUBCASE("--reps writes seed-derived pairs") {
    const std::string out3 = sb.dir("sim3");
    REQUIRE(run("simulate --dgp table1 --seed 9 --reps 3 --out " + out3) == 0);
    for (int r = 1; r <= 3; ++r) {
      CHECK(fs::exists(out3 + "/train_" + std::to_string(r) + ".csv"));
      CHECK(fs::exists(out3 + "/test_" + std::to_string(r) + ".csv"));
    }
    CHECK(mlcwmd::file_digest(out3 + "/train_1.csv") !=
          mlcwmd::file_digest(out3 + "/train_2.csv"));
  }
}

TEST_CASE("select, then the downstream commands, run the whole pipeline") {
  Sandbox sb;
  const std::string sim = sb.dir("sim");
  REQUIRE(run("simulate --dgp table1 --seed 11 --out " + sim) == 0);

  // shrink the grid for test time: single C, few starts
  Json cfg = mlcwmd::read_json_file(sim + "/config_1.json");
  cfg["model"]["c_grid"] = Json::array({3});
  cfg["model"]["n_starts"] = 2;
  cfg["output"]["dir"] = sb.dir("fit");
  mlcwmd::write_json_file(cfg, sim + "/config_small.json");

  REQUIRE(run("select --config " + sim + "/config_small.json") == 0);
  const std::string fit_dir = sb.dir("fit");
  REQUIRE(fs::exists(fit_dir + "/fit.json"));
  CHECK(fs::exists(fit_dir + "/bic_table.csv"));
  CHECK(fs::exists(fit_dir + "/starts.csv"));
  CHECK(count_lines(fit_dir + "/starts.csv") == 3);  // header + 2 starts

  const Json fit = mlcwmd::read_json_file(fit_dir + "/fit.json");
  CHECK(fit.at("schema_version").get<std::string>() == "1.0");
  CHECK(fit.at("model").at("n_clusters").get<int>() == 3);
  const double stored_train_acc = fit.at("train_accuracy").get<double>();

  SUBCASE("evaluate on the training file reproduces the stored accuracy") {
    const std::string ev = sb.dir("eval");
    REQUIRE(run("evaluate --fit " + fit_dir + "/fit.json --data " + sim +
                "/train_1.csv --cluster-col true_cluster --out " + ev) == 0);
    const Json res = mlcwmd::read_json_file(ev + "/evaluation.json");
    CHECK(res.at("accuracy_at_fit_cutoff").get<double>() ==
          doctest::Approx(stored_train_acc).epsilon(1e-12));
    CHECK(res.contains("ari"));
    CHECK(res.at("ari").get<double>() >= 0.8);
  }

  SUBCASE("predict on the test file emits per-cluster decomposition") {
    const std::string pr = sb.dir("pred");
    REQUIRE(run("predict --fit " + fit_dir + "/fit.json --data " + sim +
                "/test_1.csv --out " + pr) == 0);
    CHECK(count_lines(pr + "/predictions.csv") == 201);
    const Json preds = mlcwmd::read_json_file(pr + "/predictions.json");
    CHECK(preds.at("n").get<int>() == 200);
    const auto& first = preds.at("predictions").at(0);
    CHECK(first.at("posterior").size() == 3);
    const double p = first.at("p").get<double>();
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }

  SUBCASE("scenario writes three modes per patient") {
    const std::string sc = sb.dir("scen");
    // six patients: first six rows of the test split
    std::ifstream in(sim + "/test_1.csv");
    std::ofstream out_csv(sb.dir("patients.csv"));
    std::string line;
    for (int i = 0; i <= 6 && std::getline(in, line); ++i) {
      out_csv << line << "\n";
    }
    out_csv.close();
    REQUIRE(run("scenario --fit " + fit_dir + "/fit.json --data " +
                sb.dir("patients.csv") + " --out " + sc) == 0);
    CHECK(count_lines(sc + "/scenario.csv") == 7);  // header + 6 patients
    const Json j = mlcwmd::read_json_file(sc + "/scenario.json");
    CHECK(j.at("n").get<int>() == 6);
    // 3 predictions each = 18 in total
    int count = 0;
    for (const auto& cell : j.at("scenarios")) {
      count += cell.contains("minus_sigma");
      count += cell.contains("zero");
      count += cell.contains("plus_sigma");
      CHECK(cell.at("minus_sigma").at("p").get<double>() <=
            cell.at("plus_sigma").at("p").get<double>() + 1e-12);
    }
    CHECK(count == 18);
  }

  SUBCASE("re-running select reproduces the log-likelihood") {
    Json cfg2 = mlcwmd::read_json_file(sim + "/config_small.json");
    cfg2["output"]["dir"] = sb.dir("fit2");
    mlcwmd::write_json_file(cfg2, sim + "/config_small2.json");
    REQUIRE(run("select --config " + sim + "/config_small2.json") == 0);
    const Json fit2 = mlcwmd::read_json_file(sb.dir("fit2") + "/fit.json");
    CHECK(std::abs(fit2.at("loglik").get<double>() -
                   fit.at("loglik").get<double>()) <= 1e-9);
  }
}

TEST_CASE("fit at C=1 succeeds") {
  Sandbox sb;
  const std::string sim = sb.dir("sim");
  REQUIRE(run("simulate --dgp table1 --seed 13 --out " + sim) == 0);
  Json cfg = mlcwmd::read_json_file(sim + "/config_1.json");
  cfg["model"]["n_starts"] = 1;
  cfg["output"]["dir"] = sb.dir("fit1");
  mlcwmd::write_json_file(cfg, sim + "/config_c1.json");
  REQUIRE(run("fit --config " + sim + "/config_c1.json --c 1") == 0);
  const Json fit = mlcwmd::read_json_file(sb.dir("fit1") + "/fit.json");
  CHECK(fit.at("model").at("n_clusters").get<int>() == 1);
  CHECK(fit.at("components").size() == 1);
}

TEST_CASE("schema mismatch is reported with the missing column") {
  Sandbox sb;
  const std::string sim = sb.dir("sim");
  REQUIRE(run("simulate --dgp table1 --seed 17 --out " + sim) == 0);
  Json cfg = mlcwmd::read_json_file(sim + "/config_1.json");
  cfg["model"]["c_grid"] = Json::array({2});
  cfg["model"]["n_starts"] = 1;
  cfg["output"]["dir"] = sb.dir("fit");
  mlcwmd::write_json_file(cfg, sim + "/config_small.json");
  REQUIRE(run("select --config " + sim + "/config_small.json") == 0);

  // drop a required column from a copy of the test file
  std::ifstream in(sim + "/test_1.csv");
  std::ofstream out_csv(sb.dir("broken.csv"));
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col++ == 2) continue;  // drop x1
      out_csv << (first ? "" : ",") << cell;
      first = false;
    }
    out_csv << "\n";
  }
  out_csv.close();
  CHECK(run("predict --fit " + sb.dir("fit") + "/fit.json --data " +
            sb.dir("broken.csv") + " --out " + sb.dir("p")) != 0);
}

TEST_CASE("unknown fit schema major is rejected") {
  Sandbox sb;
  const std::string sim = sb.dir("sim");
  REQUIRE(run("simulate --dgp table1 --seed 19 --out " + sim) == 0);
  Json cfg = mlcwmd::read_json_file(sim + "/config_1.json");
  cfg["model"]["c_grid"] = Json::array({2});
  cfg["model"]["n_starts"] = 1;
  cfg["output"]["dir"] = sb.dir("fit");
  mlcwmd::write_json_file(cfg, sim + "/config_small.json");
  REQUIRE(run("select --config " + sim + "/config_small.json") == 0);

  Json fit = mlcwmd::read_json_file(sb.dir("fit") + "/fit.json");
  fit["schema_version"] = "2.0";
  mlcwmd::write_json_file(fit, sb.dir("fit") + "/fit_v2.json");
  CHECK(run("predict --fit " + sb.dir("fit") + "/fit_v2.json --data " + sim +
            "/test_1.csv --out " + sb.dir("p")) != 0);
}
