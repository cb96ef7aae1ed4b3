#pragma once

// Finite-difference verification of every analytic gradient path: the
// supervised loss, the contrastive loss, and the full network backward
// (strong + weak views through the shared parameters). Central differences
// with eps = 1e-5 in double precision. Errors are reported per instance as
//   ||g_analytic - g_fd||_inf / (||g_analytic||_inf + ||g_fd||_inf + 1e-12)
// so a single near-zero component cannot dominate the ratio while any real
// disagreement still surfaces at full size.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gdrkit/losses.hpp"
#include "gdrkit/net.hpp"
#include "gdrkit/rng.hpp"
#include "gdrkit/train.hpp"

namespace gdrkit {

inline constexpr double kGradCheckEps = 1e-5;

namespace detail {

inline double vec_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::fabs(a[i] - b[i]));
    na = std::max(na, std::fabs(a[i]));
    nb = std::max(nb, std::fabs(b[i]));
  }
  return diff / (na + nb + 1e-12);
}

inline Mat random_unit_rows(int n, int d, RngStream& rng) {
  Mat m(n, d);
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    for (int c = 0; c < d; ++c) {
      m(i, c) = rng.normal();
      norm += m(i, c) * m(i, c);
    }
    norm = std::sqrt(norm);
    for (int c = 0; c < d; ++c) m(i, c) /= norm;
  }
  return m;
}

}  // namespace detail

struct GradSuiteResult {
  double ce_max_rel = 0.0;
  double ntxent_max_rel = 0.0;
  double net_max_rel = 0.0;
  int instances = 0;

  bool pass(double loss_tol = 1e-5, double net_tol = 1e-4) const {
    return ce_max_rel < loss_tol && ntxent_max_rel < loss_tol && net_max_rel < net_tol;
  }
};

/// Central-difference check of the supervised loss gradient over random
/// weighted batches; returns the worst per-instance relative error.
inline double gradcheck_cross_entropy(int instances, RngStream rng) {
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    int n = 3 + static_cast<int>(rng.uniform_int(5));
    int c = 3 + static_cast<int>(rng.uniform_int(4));
    LogitsBatch batch;
    batch.logits = Mat(n, c);
    for (double& v : batch.logits.a) v = 2.0 * rng.normal();
    batch.labels.resize(n);
    for (int i = 0; i < n; ++i) batch.labels[i] = static_cast<int>(rng.uniform_int(c));
    if (it % 2 == 0) {
      batch.weights.resize(n);
      for (double& w : batch.weights) w = rng.uniform(0.2, 3.0);
    }
    CeResult res = cross_entropy(batch);
    std::vector<double> fd(batch.logits.a.size());
    for (size_t k = 0; k < batch.logits.a.size(); ++k) {
      double keep = batch.logits.a[k];
      batch.logits.a[k] = keep + kGradCheckEps;
      double up = cross_entropy(batch).loss;
      batch.logits.a[k] = keep - kGradCheckEps;
      double dn = cross_entropy(batch).loss;
      batch.logits.a[k] = keep;
      fd[k] = (up - dn) / (2.0 * kGradCheckEps);
    }
    worst = std::max(worst, detail::vec_rel_err(res.grad.a, fd));
  }
  return worst;
}

/// Central-difference check of the contrastive loss gradients w.r.t. both
/// embedding matrices, cycling the symmetric and pair-weight options.
inline double gradcheck_ntxent(int instances, RngStream rng) {
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    int n = 2 + static_cast<int>(rng.uniform_int(5));
    int d = 4 + static_cast<int>(rng.uniform_int(6));
    EmbeddingBatch batch;
    batch.strong = detail::random_unit_rows(n, d, rng);
    batch.weak = detail::random_unit_rows(n, d, rng);
    double tau = rng.uniform(0.08, 0.5);
    NtxentOptions opt;
    opt.symmetric = it % 3 == 1;
    if (it % 2 == 1) {
      opt.pair_weights.resize(n);
      for (double& w : opt.pair_weights) w = rng.uniform(0.2, 3.0);
    }
    NtxentResult res = ntxent(batch, tau, opt);

    std::vector<double> analytic = res.grad_strong.a;
    analytic.insert(analytic.end(), res.grad_weak.a.begin(), res.grad_weak.a.end());
    std::vector<double> fd;
    fd.reserve(analytic.size());
    auto probe = [&](Mat& m) {
      for (size_t k = 0; k < m.a.size(); ++k) {
        double keep = m.a[k];
        m.a[k] = keep + kGradCheckEps;
        double up = ntxent(batch, tau, opt).loss;
        m.a[k] = keep - kGradCheckEps;
        double dn = ntxent(batch, tau, opt).loss;
        m.a[k] = keep;
        fd.push_back((up - dn) / (2.0 * kGradCheckEps));
      }
    };
    probe(batch.strong);
    probe(batch.weak);
    worst = std::max(worst, detail::vec_rel_err(analytic, fd));
  }
  return worst;
}

/// Whole-network check: the gradient of the combined loss w.r.t. every
/// parameter, including the contrastive path through the weak views and the
/// tangent-projection term of the embedding normalization.
inline double gradcheck_net(int instances, RngStream rng) {
  NetConfig cfg;
  cfg.input_size = 16;
  cfg.conv1_ch = 4;
  cfg.conv2_ch = 4;
  cfg.trunk_dim = 8;
  cfg.proj_hidden = 8;
  cfg.embed_dim = 4;
  cfg.num_classes = 3;

  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    TinyNet net(cfg, rng.derive("net-init", {static_cast<std::uint64_t>(it)}));
    // The zero-initialized classifier head would make the logit path
    // degenerate; give every parameter a small random offset instead.
    {
      RngStream jitter = rng.derive("net-jitter", {static_cast<std::uint64_t>(it)});
      std::vector<double>& p = net.mutable_params();
      for (double& v : p) v += 0.05 * jitter.normal();
    }

    int b = 3;
    BatchInputs in;
    in.strong = Mat(b, cfg.input_dim());
    in.weak = Mat(b, cfg.input_dim());
    RngStream data = rng.derive("net-data", {static_cast<std::uint64_t>(it)});
    for (double& v : in.strong.a) v = data.uniform(-0.5, 0.5);
    for (double& v : in.weak.a) v = data.uniform(-0.5, 0.5);
    in.labels.resize(b);
    for (int i = 0; i < b; ++i) in.labels[i] = static_cast<int>(data.uniform_int(cfg.num_classes));
    static const double alphas[] = {0.0, 0.3, 0.5, 0.8, 1.0};
    in.alpha = alphas[it % 5];
    in.contrastive = in.alpha > 0.0;
    in.tau = 0.2;
    in.symmetric = it % 3 == 2;
    if (it % 2 == 1) {
      in.ce_weights.resize(b);
      for (double& w : in.ce_weights) w = data.uniform(0.2, 3.0);
    }

    BatchOutputs res = run_batch(net, in, true);
    std::vector<double> fd(net.param_count());
    std::vector<double>& params = net.mutable_params();
    for (size_t k = 0; k < fd.size(); ++k) {
      double keep = params[k];
      params[k] = keep + kGradCheckEps;
      double up = run_batch(net, in, false).total;
      params[k] = keep - kGradCheckEps;
      double dn = run_batch(net, in, false).total;
      params[k] = keep;
      fd[k] = (up - dn) / (2.0 * kGradCheckEps);
    }
    worst = std::max(worst, detail::vec_rel_err(res.grad, fd));
  }
  return worst;
}

inline GradSuiteResult run_gradient_suite(int instances = 20, std::uint64_t seed = 42) {
  RngStream root(seed);
  GradSuiteResult out;
  out.instances = instances;
  out.ce_max_rel = gradcheck_cross_entropy(instances, root.derive("ce"));
  out.ntxent_max_rel = gradcheck_ntxent(instances, root.derive("ntxent"));
  out.net_max_rel = gradcheck_net(instances, root.derive("net"));
  return out;
}

}  // namespace gdrkit
