#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is written the slow, obvious way on purpose.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

// Central finite differences over a flat parameter vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double keep = x[i];
    x[i] = keep + h;
    double fp = f(x);
    x[i] = keep - h;
    double fm = f(x);
    x[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double max_rel_err(const std::vector<double>& got, const std::vector<double>& want,
                          double floor = 1e-8) {
  double worst = 0.0;
  for (size_t i = 0; i < got.size(); ++i) {
    double denom = std::max({std::fabs(got[i]), std::fabs(want[i]), floor});
    worst = std::max(worst, std::fabs(got[i] - want[i]) / denom);
  }
  return worst;
}

// One-vs-rest AUC for a single class by explicit pair counting, ties = 1/2.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& is_pos) {
  double wins = 0.0;
  long long pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!is_pos[i]) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (is_pos[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return pairs > 0 ? wins / pairs : std::nan("");
}

// Re-balancing weights straight from the formula, q as joint probabilities.
inline std::vector<std::vector<double>> dcr_reference(
    const std::vector<std::vector<long long>>& counts, double beta) {
  long long total = 0;
  for (const auto& row : counts)
    for (long long v : row) total += v;
  double num = 0.0;
  for (const auto& row : counts)
    for (long long v : row)
      if (v > 0) num += std::pow(static_cast<double>(v) / total, beta);
  std::vector<std::vector<double>> w(counts.size());
  for (size_t d = 0; d < counts.size(); ++d) {
    w[d].resize(counts[d].size());
    for (size_t c = 0; c < counts[d].size(); ++c) {
      if (counts[d][c] > 0)
        w[d][c] = num / std::pow(static_cast<double>(counts[d][c]) / total, beta);
      else
        w[d][c] = 0.0;
    }
  }
  return w;
}

}  // namespace oracles
