#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gdrkit/common.hpp"

namespace gdrkit {

// ---------------------------------------------------------------------------
// Weighted cross-entropy
// ---------------------------------------------------------------------------

struct LogitsBatch {
  Mat logits;                   // N x C
  std::vector<int> labels;      // N, each in [0, C)
  std::vector<double> weights;  // N, nonnegative; empty = all ones

  void validate() const {
    if (logits.rows < 1 || logits.cols < 1)
      throw std::invalid_argument("LogitsBatch: empty batch");
    if (static_cast<int>(labels.size()) != logits.rows)
      throw std::invalid_argument("LogitsBatch: label count mismatch");
    for (int y : labels)
      if (y < 0 || y >= logits.cols) throw std::invalid_argument("LogitsBatch: label out of range");
    if (!weights.empty() && static_cast<int>(weights.size()) != logits.rows)
      throw std::invalid_argument("LogitsBatch: weight count mismatch");
    for (double w : weights)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("LogitsBatch: weights must be finite and >= 0");
  }
};

inline Mat softmax_rows(const Mat& logits) {
  Mat p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    double mx = logits(i, 0);
    for (int c = 1; c < logits.cols; ++c) mx = std::max(mx, logits(i, c));
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
      p(i, c) = std::exp(logits(i, c) - mx);
      z += p(i, c);
    }
    for (int c = 0; c < logits.cols; ++c) p(i, c) /= z;
  }
  return p;
}

struct CeResult {
  double loss = 0.0;
  Mat grad;  // N x C, d(loss)/d(logits)
};

/// Weighted mean of per-sample negative log-likelihoods,
/// loss = sum_i w_i * (-log softmax(z_i)[y_i]) / sum_i w_i,
/// with the exact gradient w.r.t. the logits. Normalizing by the batch
/// weight sum keeps the loss scale independent of the weighting intensity.
inline CeResult cross_entropy(const LogitsBatch& batch) {
  batch.validate();
  int n = batch.logits.rows;
  int k = batch.logits.cols;
  double wsum = 0.0;
  if (batch.weights.empty()) {
    wsum = n;
  } else {
    for (double w : batch.weights) wsum += w;
    if (wsum <= 0.0) throw std::invalid_argument("cross_entropy: batch weight sum is zero");
  }
  Mat p = softmax_rows(batch.logits);
  CeResult out;
  out.grad = Mat(n, k);
  for (int i = 0; i < n; ++i) {
    double w = batch.weights.empty() ? 1.0 : batch.weights[i];
    // -log p via logits for accuracy: recompute log-sum-exp with max shift
    double mx = batch.logits(i, 0);
    for (int c = 1; c < k; ++c) mx = std::max(mx, batch.logits(i, c));
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(batch.logits(i, c) - mx);
    double nll = std::log(z) - (batch.logits(i, batch.labels[i]) - mx);
    out.loss += w * nll;
    for (int c = 0; c < k; ++c) {
      double ind = (c == batch.labels[i]) ? 1.0 : 0.0;
      out.grad(i, c) = w * (p(i, c) - ind) / wsum;
    }
  }
  out.loss /= wsum;
  return out;
}

// ---------------------------------------------------------------------------
// Instance-discrimination (NT-Xent) term
// ---------------------------------------------------------------------------

/// 2N unit-norm feature rows: N strongly-augmented views and their
/// weakly-augmented counterparts, paired by row position.
struct EmbeddingBatch {
  Mat strong;  // N x d
  Mat weak;    // N x d

  int n_pairs() const { return strong.rows; }
  int dim() const { return strong.cols; }

  void validate() const {
    if (strong.rows < 1) throw std::invalid_argument("EmbeddingBatch: empty batch");
    if (strong.rows != weak.rows || strong.cols != weak.cols)
      throw std::invalid_argument("EmbeddingBatch: strong/weak shape mismatch");
    auto check_norms = [](const Mat& m, const char* which) {
      for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += m(i, c) * m(i, c);
        if (std::fabs(std::sqrt(s) - 1.0) > 1e-4)
          throw std::invalid_argument(std::string("EmbeddingBatch: non-unit-norm row in ") +
                                      which);
      }
    };
    check_norms(strong, "strong");
    check_norms(weak, "weak");
  }
};

struct NtxentOptions {
  /// When true, weak views anchor too (symmetric SimCLR form). The written
  /// form anchors the strong views only.
  bool symmetric = false;
  /// Optional per-pair weights (normalized by their sum); empty = uniform.
  std::vector<double> pair_weights;
};

struct NtxentResult {
  double loss = 0.0;
  Mat grad_strong;  // N x d
  Mat grad_weak;    // N x d
};

/// loss = mean_i -log( exp(f_i . f_j(i) / tau) / sum_{a in A(i)} exp(f_i . f_a / tau) )
/// with anchors i over the strong views, positives their paired weak views,
/// and A(i) all other rows of both views. Gradients are exact, including each
/// row's appearances in other anchors' denominators. The positive sits in its
/// own denominator, so each per-anchor term is >= 0 for N >= 2 and exactly 0
/// for N = 1.
inline NtxentResult ntxent(const EmbeddingBatch& batch, double tau,
                           const NtxentOptions& opt = {}) {
  if (!(tau > 0.0)) throw std::invalid_argument("ntxent: tau must be > 0");
  batch.validate();
  int n = batch.n_pairs();
  int d = batch.dim();
  int total = 2 * n;
  if (!opt.pair_weights.empty() && static_cast<int>(opt.pair_weights.size()) != n)
    throw std::invalid_argument("ntxent: pair weight count mismatch");

  // Combined row view: rows [0, n) strong, [n, 2n) weak.
  auto row = [&](int idx) -> const double* {
    return idx < n ? &batch.strong.a[static_cast<size_t>(idx) * d]
                   : &batch.weak.a[static_cast<size_t>(idx - n) * d];
  };
  auto dot = [&](int i, int j) {
    const double* x = row(i);
    const double* y = row(j);
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += x[c] * y[c];
    return s;
  };

  std::vector<int> anchors;
  for (int i = 0; i < n; ++i) anchors.push_back(i);
  if (opt.symmetric)
    for (int i = 0; i < n; ++i) anchors.push_back(n + i);

  double weight_sum = 0.0;
  std::vector<double> aw(anchors.size(), 1.0);
  for (size_t k = 0; k < anchors.size(); ++k) {
    if (!opt.pair_weights.empty()) aw[k] = opt.pair_weights[anchors[k] % n];
    weight_sum += aw[k];
  }
  if (weight_sum <= 0.0) throw std::invalid_argument("ntxent: anchor weight sum is zero");

  NtxentResult out;
  out.grad_strong = Mat(n, d);
  out.grad_weak = Mat(n, d);
  auto grad_row = [&](int idx) -> double* {
    return idx < n ? &out.grad_strong.a[static_cast<size_t>(idx) * d]
                   : &out.grad_weak.a[static_cast<size_t>(idx - n) * d];
  };

  std::vector<double> sims(total);
  std::vector<double> soft(total);
  for (size_t k = 0; k < anchors.size(); ++k) {
    int i = anchors[k];
    int pos = i < n ? n + i : i - n;
    double scale = aw[k] / weight_sum;

    double mx = -1.0 / 0.0;
    for (int a = 0; a < total; ++a) {
      if (a == i) continue;
      sims[a] = dot(i, a) / tau;
      mx = std::max(mx, sims[a]);
    }
    double z = 0.0;
    for (int a = 0; a < total; ++a) {
      if (a == i) continue;
      soft[a] = std::exp(sims[a] - mx);
      z += soft[a];
    }
    out.loss += scale * (std::log(z) + mx - sims[pos]);

    double* gi = grad_row(i);
    const double* fi = row(i);
    const double* fp = row(pos);
    for (int a = 0; a < total; ++a) {
      if (a == i) continue;
      double p = soft[a] / z;
      const double* fa = row(a);
      double* ga = grad_row(a);
      double coef = scale * p / tau;
      for (int c = 0; c < d; ++c) {
        gi[c] += coef * fa[c];
        ga[c] += coef * fi[c];
      }
    }
    double coef = scale / tau;
    for (int c = 0; c < d; ++c) {
      gi[c] -= coef * fp[c];
      grad_row(pos)[c] -= coef * fi[c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dynamic mixing
// ---------------------------------------------------------------------------

/// Linear decay of the contrastive weight across training: alpha(0) = 1,
/// alpha(total_epochs - 1) = 0.
struct AlphaSchedule {
  int total_epochs = 1;
};

inline double alpha_at(const AlphaSchedule& sched, int epoch) {
  if (sched.total_epochs < 1) throw std::invalid_argument("AlphaSchedule: total_epochs < 1");
  if (epoch < 0 || epoch >= sched.total_epochs)
    throw std::invalid_argument("alpha_at: epoch out of range");
  if (sched.total_epochs == 1) return 0.0;
  return 1.0 - static_cast<double>(epoch) / (sched.total_epochs - 1);
}

struct DahResult {
  double loss = 0.0;
  Mat grad_logits;
  Mat grad_strong;
  Mat grad_weak;
};

/// total = (1-alpha)*sup + alpha*scon, with the gradient sets scaled
/// identically. The supervised gradients flow to the logits and the
/// contrastive ones to the embeddings; they meet in the network backward
/// pass below the shared trunk.
inline DahResult dahloss_combine(const CeResult& sup, const NtxentResult& scon, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("dahloss_combine: alpha outside [0,1]");
  DahResult out;
  out.loss = (1.0 - alpha) * sup.loss + alpha * scon.loss;
  out.grad_logits = sup.grad;
  for (double& g : out.grad_logits.a) g *= (1.0 - alpha);
  out.grad_strong = scon.grad_strong;
  out.grad_weak = scon.grad_weak;
  for (double& g : out.grad_strong.a) g *= alpha;
  for (double& g : out.grad_weak.a) g *= alpha;
  return out;
}

}  // namespace gdrkit
