#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gdrkit/common.hpp"

namespace gdrkit {

// ---------------------------------------------------------------------------
// Domain-class re-balancing
// ---------------------------------------------------------------------------

struct DomainClassCounts {
  std::vector<std::string> domains;
  std::vector<std::string> classes;
  Mat counts;  // |domains| x |classes|, nonnegative integers stored as double

  long long total() const {
    long long t = 0;
    for (double v : counts.a) t += static_cast<long long>(v);
    return t;
  }

  void validate() const {
    if (domains.empty() || classes.empty())
      throw std::invalid_argument("DomainClassCounts: empty axis");
    if (counts.rows != static_cast<int>(domains.size()) ||
        counts.cols != static_cast<int>(classes.size()))
      throw std::invalid_argument("DomainClassCounts: shape mismatch");
    for (double v : counts.a) {
      if (!(v >= 0.0) || v != std::floor(v))
        throw std::invalid_argument("DomainClassCounts: counts must be nonnegative integers");
    }
    if (total() == 0) throw std::invalid_argument("DomainClassCounts: all counts are zero");
  }
};

enum class QMode {
  Joint,                 // q_c^d = n_c^d / total         (default)
  PerDomainConditional,  // q_c^d = n_c^d / n^d
};

/// Occurrence probabilities q_c^d for every (domain, class) pair.
inline Mat occurrence_probs(const DomainClassCounts& cc, QMode mode = QMode::Joint) {
  cc.validate();
  Mat q(cc.counts.rows, cc.counts.cols);
  if (mode == QMode::Joint) {
    double t = static_cast<double>(cc.total());
    for (size_t i = 0; i < q.a.size(); ++i) q.a[i] = cc.counts.a[i] / t;
  } else {
    for (int d = 0; d < q.rows; ++d) {
      double nd = 0.0;
      for (int c = 0; c < q.cols; ++c) nd += cc.counts(d, c);
      for (int c = 0; c < q.cols; ++c) q(d, c) = nd > 0.0 ? cc.counts(d, c) / nd : 0.0;
    }
  }
  return q;
}

/// w_c^d = sum_{d',j} (q_j^{d'})^beta / (q_c^d)^beta. Pairs with zero
/// occurrence contribute nothing to the numerator and get weight 0: they
/// never label a real sample, and excluding them keeps the numerator the sum
/// over observed pairs only.
inline Mat dcr_weights(const DomainClassCounts& cc, double beta, QMode mode = QMode::Joint) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("dcr_weights: beta must be finite and >= 0");
  Mat q = occurrence_probs(cc, mode);
  double num = 0.0;
  for (double v : q.a)
    if (v > 0.0) num += std::pow(v, beta);
  Mat w(q.rows, q.cols);
  for (size_t i = 0; i < q.a.size(); ++i)
    w.a[i] = q.a[i] > 0.0 ? num / std::pow(q.a[i], beta) : 0.0;
  return w;
}

/// Precomputed lookup used by the trainer and the CLI.
struct DcrTable {
  std::vector<std::string> domains;
  std::vector<std::string> classes;
  Mat q;
  Mat weights;
  double beta = 0.5;
  QMode mode = QMode::Joint;

  static DcrTable build(const DomainClassCounts& cc, double beta, QMode mode = QMode::Joint) {
    DcrTable t;
    t.domains = cc.domains;
    t.classes = cc.classes;
    t.q = occurrence_probs(cc, mode);
    t.weights = dcr_weights(cc, beta, mode);
    t.beta = beta;
    t.mode = mode;
    return t;
  }

  double weight(int domain_idx, int class_idx) const {
    if (domain_idx < 0 || domain_idx >= weights.rows || class_idx < 0 ||
        class_idx >= weights.cols)
      throw std::out_of_range("DcrTable::weight: index out of range");
    return weights(domain_idx, class_idx);
  }
};

}  // namespace gdrkit
