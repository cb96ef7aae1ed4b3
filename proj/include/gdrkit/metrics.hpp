#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "gdrkit/common.hpp"

namespace gdrkit {

namespace detail {

/// Binary AUC from the Mann-Whitney rank statistic; tied scores get their
/// average rank, so each tied positive/negative pair contributes 1/2.
inline double binary_auc(const std::vector<double>& scores, const std::vector<char>& is_pos) {
  size_t n = scores.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    double avg = 0.5 * (i + j) + 1.0;  // ranks are 1-based
    for (size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double rank_sum = 0.0;
  size_t n_pos = 0;
  for (size_t k = 0; k < n; ++k)
    if (is_pos[k]) {
      rank_sum += rank[k];
      ++n_pos;
    }
  size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nan("");
  return (rank_sum - 0.5 * n_pos * (n_pos + 1)) / (static_cast<double>(n_pos) * n_neg);
}

}  // namespace detail

/// Per-class one-vs-rest AUC as fractions in [0,1]; classes absent from the
/// labels get NaN. Rows of `scores` must be probability vectors.
inline std::vector<double> auc_ovr_per_class(const Mat& scores, const std::vector<int>& labels) {
  if (scores.rows < 2) throw std::invalid_argument("auc_ovr_macro: need at least 2 samples");
  if (static_cast<int>(labels.size()) != scores.rows)
    throw std::invalid_argument("auc_ovr_macro: label count mismatch");
  for (int i = 0; i < scores.rows; ++i) {
    double sum = 0.0;
    for (int c = 0; c < scores.cols; ++c) sum += scores(i, c);
    if (std::fabs(sum - 1.0) > 1e-6)
      throw std::invalid_argument("auc_ovr_macro: score row does not sum to 1");
  }
  std::set<int> present(labels.begin(), labels.end());
  for (int y : present)
    if (y < 0 || y >= scores.cols)
      throw std::invalid_argument("auc_ovr_macro: label outside score columns");
  if (present.size() < 2)
    throw std::invalid_argument("auc_ovr_macro: need at least 2 classes present");

  std::vector<double> out(scores.cols, std::numeric_limits<double>::quiet_NaN());
  for (int cls : present) {
    std::vector<double> col(scores.rows);
    std::vector<char> pos(scores.rows);
    for (int i = 0; i < scores.rows; ++i) {
      col[i] = scores(i, cls);
      pos[i] = labels[i] == cls ? 1 : 0;
    }
    out[cls] = detail::binary_auc(col, pos);
  }
  return out;
}

/// One-vs-rest macro AUC over the classes present in `labels`, as a fraction
/// in [0,1].
inline double auc_ovr_macro(const Mat& scores, const std::vector<int>& labels) {
  std::vector<double> per = auc_ovr_per_class(scores, labels);
  double total = 0.0;
  int count = 0;
  for (double v : per) {
    if (std::isnan(v)) continue;
    total += v;
    ++count;
  }
  return total / count;
}

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size() || preds.empty())
    throw std::invalid_argument("accuracy: length mismatch or empty");
  size_t correct = 0;
  for (size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / preds.size();
}

/// Per-class F1 for the classes present in `labels` (absent classes NaN);
/// a class with no true or predicted positives scores 0. `num_classes`
/// bounds the output vector and must cover every label and prediction.
inline std::vector<double> f1_per_class(const std::vector<int>& preds,
                                        const std::vector<int>& labels, int num_classes) {
  if (preds.size() != labels.size() || preds.empty())
    throw std::invalid_argument("macro_f1: length mismatch or empty");
  std::set<int> present(labels.begin(), labels.end());
  std::vector<double> out(num_classes, std::numeric_limits<double>::quiet_NaN());
  for (int cls : present) {
    if (cls < 0 || cls >= num_classes)
      throw std::invalid_argument("macro_f1: label outside class range");
    long long tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
      bool p = preds[i] == cls, t = labels[i] == cls;
      if (p && t) ++tp;
      else if (p) ++fp;
      else if (t) ++fn;
    }
    out[cls] = (2 * tp + fp + fn) > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  }
  return out;
}

/// Macro F1 over classes present in the labels; a class with P+R = 0 scores
/// 0, and classes never true and never predicted are excluded.
inline double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels) {
  int top = 0;
  for (int y : labels) top = std::max(top, y);
  for (int y : preds) top = std::max(top, y);
  std::vector<double> per = f1_per_class(preds, labels, top + 1);
  double total = 0.0;
  int count = 0;
  for (double v : per) {
    if (std::isnan(v)) continue;
    total += v;
    ++count;
  }
  return total / count;
}

inline std::vector<int> argmax_rows(const Mat& scores) {
  std::vector<int> out(scores.rows);
  for (int i = 0; i < scores.rows; ++i) {
    int best = 0;
    for (int c = 1; c < scores.cols; ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    out[i] = best;
  }
  return out;
}

}  // namespace gdrkit
