#include "mlcwmd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mlcwmd/errors.hpp"

namespace mlcwmd {

std::string to_string(ColumnRole r) {
  switch (r) {
    case ColumnRole::response: return "response";
    case ColumnRole::group: return "group";
    case ColumnRole::continuous: return "continuous";
    case ColumnRole::categorical: return "categorical";
    case ColumnRole::dichotomous: return "dichotomous";
    case ColumnRole::fixed_only: return "fixed-only";
    case ColumnRole::ignore: return "ignore";
  }
  return "?";
}

ColumnRole role_from_string(const std::string& s) {
  if (s == "response") return ColumnRole::response;
  if (s == "group") return ColumnRole::group;
  if (s == "continuous") return ColumnRole::continuous;
  if (s == "categorical") return ColumnRole::categorical;
  if (s == "dichotomous") return ColumnRole::dichotomous;
  if (s == "fixed-only" || s == "fixed_only") return ColumnRole::fixed_only;
  if (s == "ignore") return ColumnRole::ignore;
  throw DataError("unknown column role '" + s + "'");
}

int CategoricalCodec::code_of(const std::string& label) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == label) return static_cast<int>(i) + 1;
  }
  return -1;
}

std::vector<int> Dataset::v_levels() const {
  std::vector<int> ks;
  ks.reserve(v_codecs.size());
  for (const auto& c : v_codecs) ks.push_back(c.k());
  return ks;
}

DataSchema Dataset::schema() const {
  return DataSchema{y_name,  group_name, u_names,     v_names,
                    v_codecs, d_names,    d_domain,    extra_names,
                    group_levels};
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (first) {
      t.header = cells;
      first = false;
    } else {
      if (cells.size() != t.header.size()) {
        throw DataError("row " + std::to_string(t.rows.size() + 1) + " in '" +
                        path + "' has " + std::to_string(cells.size()) +
                        " cells, header has " +
                        std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw DataError("'" + path + "' is empty");
  return t;
}

int column_index(const Table& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) return -1;
  return static_cast<int>(it - t.header.begin());
}

[[noreturn]] void cell_error(const std::string& what, long row,
                             const std::string& col, const std::string& val) {
  throw DataError(what + " at row " + std::to_string(row) + ", column '" +
                  col + "' (value '" + val + "')");
}

double parse_double(const std::string& s, long row, const std::string& col) {
  if (s.empty()) cell_error("missing value", row, col, s);
  const char* c = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(c, &end);
  if (end != c + s.size() || !std::isfinite(v)) {
    cell_error("unparseable number", row, col, s);
  }
  return v;
}

int parse_binary(const std::string& s, long row, const std::string& col) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  cell_error("non-binary entry (expected 0 or 1)", row, col, s);
}

double parse_domain(const std::string& s, IsingDomain dom, long row,
                    const std::string& col) {
  if (dom == IsingDomain::zero_one) {
    if (s == "0") return 0.0;
    if (s == "1") return 1.0;
    cell_error("dichotomous entry outside {0,1}", row, col, s);
  }
  if (s == "-1") return -1.0;
  if (s == "1") return 1.0;
  cell_error("dichotomous entry outside {-1,1}", row, col, s);
}

void require_nonempty(const std::string& s, long row, const std::string& col) {
  if (s.empty()) cell_error("missing value", row, col, s);
}

}  // namespace

Dataset load_dataset(const std::string& path, const RoleMap& roles,
                     IsingDomain d_domain) {
  const Table t = read_csv(path);
  Dataset ds;
  ds.d_domain = d_domain;

  std::vector<std::pair<int, ColumnRole>> cols;  // in header order
  for (const auto& [name, role] : roles) {
    if (column_index(t, name) < 0) {
      throw DataError("manifest column '" + name + "' not found in '" + path +
                      "'; header has " + std::to_string(t.header.size()) +
                      " columns");
    }
  }
  for (int idx = 0; idx < static_cast<int>(t.header.size()); ++idx) {
    const auto it = roles.find(t.header[idx]);
    if (it == roles.end()) continue;  // unmentioned columns are ignored
    cols.emplace_back(idx, it->second);
  }

  int y_col = -1, g_col = -1;
  std::vector<int> u_cols, v_cols, d_cols, x_cols;
  for (const auto& [idx, role] : cols) {
    switch (role) {
      case ColumnRole::response:
        if (y_col >= 0) throw DataError("two response columns in manifest");
        y_col = idx;
        break;
      case ColumnRole::group:
        if (g_col >= 0) throw DataError("two group columns in manifest");
        g_col = idx;
        break;
      case ColumnRole::continuous: u_cols.push_back(idx); break;
      case ColumnRole::categorical: v_cols.push_back(idx); break;
      case ColumnRole::dichotomous: d_cols.push_back(idx); break;
      case ColumnRole::fixed_only: x_cols.push_back(idx); break;
      case ColumnRole::ignore: break;
    }
  }
  if (y_col < 0) throw DataError("manifest has no response column");
  if (g_col < 0) throw DataError("manifest has no group column");

  const long n = static_cast<long>(t.rows.size());
  if (n == 0) throw DataError("'" + path + "' has no data rows");

  ds.y.resize(n);
  ds.group.resize(n);
  ds.U.resize(n, static_cast<long>(u_cols.size()));
  ds.V.resize(n, static_cast<long>(v_cols.size()));
  ds.D.resize(n, static_cast<long>(d_cols.size()));
  ds.X_extra.resize(n, static_cast<long>(x_cols.size()));
  ds.y_name = t.header[y_col];
  ds.group_name = t.header[g_col];
  for (int c : u_cols) ds.u_names.push_back(t.header[c]);
  for (int c : v_cols) ds.v_names.push_back(t.header[c]);
  for (int c : d_cols) ds.d_names.push_back(t.header[c]);
  for (int c : x_cols) ds.extra_names.push_back(t.header[c]);
  ds.v_codecs.resize(v_cols.size());

  std::unordered_map<std::string, int> group_ids;
  std::vector<std::unordered_map<std::string, int>> v_maps(v_cols.size());

  for (long i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    const long row = i + 1;
    ds.y[i] = parse_binary(r[y_col], row, ds.y_name);

    require_nonempty(r[g_col], row, ds.group_name);
    auto [git, inserted] = group_ids.try_emplace(
        r[g_col], static_cast<int>(ds.group_levels.size()) + 1);
    if (inserted) ds.group_levels.push_back(r[g_col]);
    ds.group[i] = git->second;

    for (std::size_t k = 0; k < u_cols.size(); ++k) {
      ds.U(i, static_cast<long>(k)) =
          parse_double(r[u_cols[k]], row, ds.u_names[k]);
    }
    for (std::size_t k = 0; k < v_cols.size(); ++k) {
      const std::string& val = r[v_cols[k]];
      require_nonempty(val, row, ds.v_names[k]);
      auto [vit, vin] = v_maps[k].try_emplace(
          val, static_cast<int>(ds.v_codecs[k].levels.size()) + 1);
      if (vin) ds.v_codecs[k].levels.push_back(val);
      ds.V(i, static_cast<long>(k)) = vit->second;
    }
    for (std::size_t k = 0; k < d_cols.size(); ++k) {
      ds.D(i, static_cast<long>(k)) =
          parse_domain(r[d_cols[k]], d_domain, row, ds.d_names[k]);
    }
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      ds.X_extra(i, static_cast<long>(k)) =
          parse_double(r[x_cols[k]], row, ds.extra_names[k]);
    }
  }
  return ds;
}

Dataset load_dataset_with_schema(const std::string& path,
                                 const DataSchema& schema) {
  const Table t = read_csv(path);
  Dataset ds;
  ds.d_domain = schema.d_domain;
  ds.y_name = schema.y_name;
  ds.group_name = schema.group_name;
  ds.u_names = schema.u_names;
  ds.v_names = schema.v_names;
  ds.v_codecs = schema.v_codecs;
  ds.d_names = schema.d_names;
  ds.extra_names = schema.extra_names;
  ds.group_levels = schema.group_levels;

  const int y_col = column_index(t, schema.y_name);
  const int g_col =
      schema.group_name.empty() ? -1 : column_index(t, schema.group_name);
  ds.has_response = y_col >= 0;

  auto need = [&](const std::string& name) {
    const int c = column_index(t, name);
    if (c < 0) {
      throw DataError("column '" + name +
                      "' required by the fitted model is missing from '" +
                      path + "'");
    }
    return c;
  };

  std::vector<int> u_cols, v_cols, d_cols, x_cols;
  for (const auto& nm : schema.u_names) u_cols.push_back(need(nm));
  for (const auto& nm : schema.v_names) v_cols.push_back(need(nm));
  for (const auto& nm : schema.d_names) d_cols.push_back(need(nm));
  for (const auto& nm : schema.extra_names) x_cols.push_back(need(nm));

  const long n = static_cast<long>(t.rows.size());
  if (n == 0) throw DataError("'" + path + "' has no data rows");
  ds.y = Eigen::VectorXi::Constant(n, -1);
  ds.group = Eigen::VectorXi::Zero(n);
  ds.U.resize(n, static_cast<long>(u_cols.size()));
  ds.V.resize(n, static_cast<long>(v_cols.size()));
  ds.D.resize(n, static_cast<long>(d_cols.size()));
  ds.X_extra.resize(n, static_cast<long>(x_cols.size()));

  std::unordered_map<std::string, int> group_ids;
  for (std::size_t g = 0; g < schema.group_levels.size(); ++g) {
    group_ids[schema.group_levels[g]] = static_cast<int>(g) + 1;
  }

  for (long i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    const long row = i + 1;
    if (ds.has_response) ds.y[i] = parse_binary(r[y_col], row, schema.y_name);
    if (g_col >= 0) {
      const auto it = group_ids.find(r[g_col]);
      ds.group[i] = it == group_ids.end() ? 0 : it->second;  // 0 = unseen
    }
    for (std::size_t k = 0; k < u_cols.size(); ++k) {
      ds.U(i, static_cast<long>(k)) =
          parse_double(r[u_cols[k]], row, schema.u_names[k]);
    }
    for (std::size_t k = 0; k < v_cols.size(); ++k) {
      const std::string& val = r[v_cols[k]];
      require_nonempty(val, row, schema.v_names[k]);
      const int code = schema.v_codecs[k].code_of(val);
      if (code < 0) {
        std::string known;
        for (const auto& lv : schema.v_codecs[k].levels) {
          known += (known.empty() ? "" : ", ") + lv;
        }
        cell_error("unknown categorical level (known: " + known + ")", row,
                   schema.v_names[k], val);
      }
      ds.V(i, static_cast<long>(k)) = code;
    }
    for (std::size_t k = 0; k < d_cols.size(); ++k) {
      ds.D(i, static_cast<long>(k)) =
          parse_domain(r[d_cols[k]], schema.d_domain, row, schema.d_names[k]);
    }
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      ds.X_extra(i, static_cast<long>(k)) =
          parse_double(r[x_cols[k]], row, schema.extra_names[k]);
    }
  }
  return ds;
}

void save_dataset_csv(const Dataset& ds, const std::string& path,
                      const Eigen::VectorXi* true_labels,
                      const std::string& label_col) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.precision(17);

  out << ds.y_name << ',' << ds.group_name;
  for (const auto& nm : ds.u_names) out << ',' << nm;
  for (const auto& nm : ds.v_names) out << ',' << nm;
  for (const auto& nm : ds.d_names) out << ',' << nm;
  for (const auto& nm : ds.extra_names) out << ',' << nm;
  if (true_labels) out << ',' << label_col;
  out << '\n';

  for (int i = 0; i < ds.n(); ++i) {
    out << ds.y[i] << ',' << ds.group_levels[ds.group[i] - 1];
    for (int k = 0; k < ds.p(); ++k) out << ',' << ds.U(i, k);
    for (int k = 0; k < ds.q(); ++k) {
      out << ',' << ds.v_codecs[k].levels[ds.V(i, k) - 1];
    }
    for (int k = 0; k < ds.h(); ++k) {
      out << ',' << static_cast<long>(ds.D(i, k));
    }
    for (int k = 0; k < static_cast<int>(ds.X_extra.cols()); ++k) {
      out << ',' << ds.X_extra(i, k);
    }
    if (true_labels) out << ',' << (*true_labels)[i];
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<Violation> validate(const Dataset& ds) {
  std::vector<Violation> v;
  const double lo = ds.d_domain == IsingDomain::zero_one ? 0.0 : -1.0;

  for (int i = 0; i < ds.n(); ++i) {
    if (ds.has_response && ds.y[i] != 0 && ds.y[i] != 1) {
      v.push_back({"response not binary", i + 1, ds.y_name});
    }
    for (int k = 0; k < ds.h(); ++k) {
      if (ds.D(i, k) != lo && ds.D(i, k) != 1.0) {
        v.push_back({"dichotomous entry outside domain", i + 1, ds.d_names[k]});
      }
    }
    for (int k = 0; k < ds.q(); ++k) {
      if (ds.V(i, k) < 1 || ds.V(i, k) > ds.v_codecs[k].k()) {
        v.push_back({"categorical code out of range", i + 1, ds.v_names[k]});
      }
    }
    for (int k = 0; k < ds.p(); ++k) {
      if (!std::isfinite(ds.U(i, k))) {
        v.push_back({"non-finite continuous value", i + 1, ds.u_names[k]});
      }
    }
    if (ds.group[i] < 0 || ds.group[i] > ds.n_groups()) {
      v.push_back({"group id out of range", i + 1, ds.group_name});
    }
  }

  std::vector<long> counts(static_cast<std::size_t>(ds.n_groups()) + 1, 0);
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.group[i] >= 1 && ds.group[i] <= ds.n_groups()) ++counts[ds.group[i]];
  }
  for (int g = 1; g <= ds.n_groups(); ++g) {
    if (counts[g] == 0) {
      v.push_back({"empty group '" + ds.group_levels[g - 1] + "'", -1,
                   ds.group_name});
    }
  }
  return v;
}

}  // namespace mlcwmd
