#include "mlcwmd/metrics.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "mlcwmd/errors.hpp"

namespace mlcwmd {

RocResult roc_cutoff(const Eigen::VectorXd& scores,
                     const Eigen::VectorXi& labels) {
  const long n = scores.size();
  if (labels.size() != n) throw FitError("scores/labels length mismatch");
  long n1 = 0;
  for (long i = 0; i < n; ++i) n1 += labels[i] == 1 ? 1 : 0;
  const long n0 = n - n1;
  if (n1 == 0 || n0 == 0) {
    throw FitError("ROC needs both classes present");
  }

  std::vector<long> idx(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::sort(idx.begin(), idx.end(),
            [&](long a, long b) { return scores[a] > scores[b]; });

  RocResult best;
  best.auc = 0.0;
  double tp = 0, fp = 0;
  double tpr_prev = 0.0, fpr_prev = 0.0;
  double best_j = -2.0;

  std::size_t i = 0;
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    // consume the tie block at threshold s
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] == 1 ? tp : fp) += 1.0;
      ++i;
    }
    const double tpr = tp / n1;
    const double fpr = fp / n0;
    best.auc += 0.5 * (tpr + tpr_prev) * (fpr - fpr_prev);
    // cutoff "score >= s" realizes (tpr, fpr)
    const double j = tpr - fpr;
    if (j > best_j || (j == best_j && s < best.cutoff)) {
      best_j = j;
      best.cutoff = s;
      best.sensitivity = tpr;
      best.specificity = 1.0 - fpr;
    }
    tpr_prev = tpr;
    fpr_prev = fpr;
  }
  best.accuracy = accuracy_at(scores, labels, best.cutoff);
  return best;
}

double accuracy_at(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels,
                   double cutoff) {
  const long n = scores.size();
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    const int pred = scores[i] >= cutoff ? 1 : 0;
    hits += pred == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / n;
}

double adjusted_rand_index(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  const long n = a.size();
  if (b.size() != n) throw FitError("partition length mismatch");
  std::map<std::pair<int, int>, long> cells;
  std::map<int, long> row_sums, col_sums;
  for (long i = 0; i < n; ++i) {
    cells[{a[i], b[i]}]++;
    row_sums[a[i]]++;
    col_sums[b[i]]++;
  }
  auto choose2 = [](long x) { return 0.5 * x * (x - 1); };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [k, v] : cells) sum_cells += choose2(v);
  for (const auto& [k, v] : row_sums) sum_rows += choose2(v);
  for (const auto& [k, v] : col_sums) sum_cols += choose2(v);
  const double total = choose2(n);
  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (maximum - expected);
}

}  // namespace mlcwmd
