#include "mlcwmd/design.hpp"

#include <algorithm>
#include <cstdlib>

#include "mlcwmd/errors.hpp"

namespace mlcwmd {

std::vector<std::string> default_formula(const Dataset& ds) {
  std::vector<std::string> f;
  f.insert(f.end(), ds.u_names.begin(), ds.u_names.end());
  f.insert(f.end(), ds.v_names.begin(), ds.v_names.end());
  f.insert(f.end(), ds.d_names.begin(), ds.d_names.end());
  f.insert(f.end(), ds.extra_names.begin(), ds.extra_names.end());
  return f;
}

namespace {

int find_name(const std::vector<std::string>& names, const std::string& nm) {
  const auto it = std::find(names.begin(), names.end(), nm);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

bool numeric_label(const std::string& s, double* value) {
  if (s.empty()) return false;
  char* end = nullptr;
  *value = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Dummy columns need a reference level that does not depend on row
// order: numeric label order when every level parses as a number,
// lexicographic otherwise. Returns level codes (1-based), reference
// first.
std::vector<int> level_order(const CategoricalCodec& codec) {
  std::vector<int> order(static_cast<std::size_t>(codec.k()));
  for (int i = 0; i < codec.k(); ++i) order[static_cast<std::size_t>(i)] = i + 1;
  bool all_numeric = true;
  std::vector<double> values(static_cast<std::size_t>(codec.k()));
  for (int i = 0; i < codec.k(); ++i) {
    all_numeric = all_numeric &&
                  numeric_label(codec.levels[static_cast<std::size_t>(i)],
                                &values[static_cast<std::size_t>(i)]);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (all_numeric) {
      return values[static_cast<std::size_t>(a - 1)] <
             values[static_cast<std::size_t>(b - 1)];
    }
    return codec.levels[static_cast<std::size_t>(a - 1)] <
           codec.levels[static_cast<std::size_t>(b - 1)];
  });
  return order;
}

}  // namespace

Design build_design(const Dataset& ds, const std::vector<std::string>& formula,
                    bool intercept) {
  const int n = ds.n();
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> names;

  if (intercept) {
    cols.push_back(Eigen::VectorXd::Ones(n));
    names.push_back("(intercept)");
  }

  for (const auto& term : formula) {
    int idx;
    if ((idx = find_name(ds.u_names, term)) >= 0) {
      cols.push_back(ds.U.col(idx));
      names.push_back(term);
    } else if ((idx = find_name(ds.v_names, term)) >= 0) {
      const auto& codec = ds.v_codecs[idx];
      const std::vector<int> order = level_order(codec);
      for (std::size_t pos = 1; pos < order.size(); ++pos) {
        const int code = order[pos];
        Eigen::VectorXd dummy(n);
        for (int i = 0; i < n; ++i) dummy[i] = ds.V(i, idx) == code ? 1.0 : 0.0;
        cols.push_back(std::move(dummy));
        names.push_back(term + "=" + codec.levels[static_cast<std::size_t>(code - 1)]);
      }
    } else if ((idx = find_name(ds.d_names, term)) >= 0) {
      cols.push_back(ds.D.col(idx));
      names.push_back(term);
    } else if ((idx = find_name(ds.extra_names, term)) >= 0) {
      cols.push_back(ds.X_extra.col(idx));
      names.push_back(term);
    } else {
      throw DataError("formula term '" + term +
                      "' is not a covariate column of the dataset");
    }
  }

  Design d;
  d.intercept = intercept;
  d.names = std::move(names);
  d.F.resize(n, static_cast<long>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    d.F.col(static_cast<long>(j)) = cols[j];
  }
  return d;
}

}  // namespace mlcwmd
