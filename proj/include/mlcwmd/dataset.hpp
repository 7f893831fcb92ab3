#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlcwmd/ising.hpp"

namespace mlcwmd {

enum class ColumnRole {
  response,
  group,
  continuous,
  categorical,
  dichotomous,
  fixed_only,
  ignore
};

std::string to_string(ColumnRole r);
ColumnRole role_from_string(const std::string& s);

// column name -> role; names must exist in the CSV header
using RoleMap = std::map<std::string, ColumnRole>;

// Level labels in code order; code = index + 1.
struct CategoricalCodec {
  std::vector<std::string> levels;
  int k() const { return static_cast<int>(levels.size()); }
  // -1 when unknown
  int code_of(const std::string& label) const;
};

// Column layout learned at training time, persisted with every fit so
// new files re-use the same encodings.
struct DataSchema {
  std::string y_name;
  std::string group_name;
  std::vector<std::string> u_names;
  std::vector<std::string> v_names;
  std::vector<CategoricalCodec> v_codecs;
  std::vector<std::string> d_names;
  IsingDomain d_domain = IsingDomain::zero_one;
  std::vector<std::string> extra_names;  // fixed-only numeric columns
  std::vector<std::string> group_levels;
};

struct Dataset {
  Eigen::VectorXi y;       // 0/1; unset entries -1 when has_response=false
  bool has_response = true;
  Eigen::VectorXi group;   // 1..J by first appearance; 0 = not in schema
  std::vector<std::string> group_levels;
  Eigen::MatrixXd U;
  Eigen::MatrixXi V;       // codes 1..k_r
  std::vector<CategoricalCodec> v_codecs;
  Eigen::MatrixXd D;       // domain values
  IsingDomain d_domain = IsingDomain::zero_one;
  Eigen::MatrixXd X_extra;
  std::string y_name, group_name;
  std::vector<std::string> u_names, v_names, d_names, extra_names;

  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(U.cols()); }
  int q() const { return static_cast<int>(V.cols()); }
  int h() const { return static_cast<int>(D.cols()); }
  int n_groups() const { return static_cast<int>(group_levels.size()); }
  std::vector<int> v_levels() const;
  DataSchema schema() const;
};

// Fresh ingestion: encodings assigned by first appearance in file order.
Dataset load_dataset(const std::string& path, const RoleMap& roles,
                     IsingDomain d_domain = IsingDomain::zero_one);

// Schema ingestion for prediction/evaluation: encodings come from the
// schema; unknown categorical levels are an error listing the known ones;
// unseen group labels get id 0; response and group columns may be absent.
Dataset load_dataset_with_schema(const std::string& path,
                                 const DataSchema& schema);

void save_dataset_csv(const Dataset& ds, const std::string& path,
                      const Eigen::VectorXi* true_labels = nullptr,
                      const std::string& label_col = "true_cluster");

struct Violation {
  std::string what;
  long row = -1;  // 1-based data row, -1 when dataset-level
  std::string column;
};

std::vector<Violation> validate(const Dataset& ds);

}  // namespace mlcwmd
