#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gdrkit/common.hpp"
#include "gdrkit/image.hpp"
#include "gdrkit/rng.hpp"

namespace gdrkit {

// ---------------------------------------------------------------------------
// TinyNet: conv(5x5,s4) -> relu -> conv(3x3,s2) -> relu -> avgpool(2x2) ->
// linear trunk -> relu -> {linear classifier, 2-layer projection head with
// unit normalization}. Small enough for finite-difference checks, big enough
// to separate the synthetic domains.
// ---------------------------------------------------------------------------

struct NetConfig {
  int input_size = 64;
  int conv1_ch = 16;
  int conv2_ch = 32;
  int trunk_dim = 128;
  int proj_hidden = 128;
  int embed_dim = 32;
  int num_classes = 5;

  int conv1_out() const { return (input_size + 4 - 5) / 4 + 1; }
  int conv2_out() const { return (conv1_out() + 2 - 3) / 2 + 1; }
  bool pooled() const { return conv2_out() % 2 == 0; }
  int pool_out() const { return pooled() ? conv2_out() / 2 : conv2_out(); }
  int flat_dim() const { return conv2_ch * pool_out() * pool_out(); }
  int input_dim() const { return 3 * input_size * input_size; }

  void validate() const {
    if (input_size < 5 || conv1_ch < 1 || conv2_ch < 1 || trunk_dim < 1 ||
        proj_hidden < 1 || embed_dim < 1 || num_classes < 2)
      throw std::invalid_argument("NetConfig: degenerate dimensions");
  }
};

namespace detail {

struct ParamLayout {
  // offsets into the flat parameter vector
  size_t conv1_w, conv1_b, conv2_w, conv2_b;
  size_t trunk_w, trunk_b, cls_w, cls_b;
  size_t proj1_w, proj1_b, proj2_w, proj2_b;
  size_t total;

  explicit ParamLayout(const NetConfig& c) {
    size_t at = 0;
    auto take = [&at](size_t n) {
      size_t here = at;
      at += n;
      return here;
    };
    conv1_w = take(static_cast<size_t>(c.conv1_ch) * 3 * 5 * 5);
    conv1_b = take(c.conv1_ch);
    conv2_w = take(static_cast<size_t>(c.conv2_ch) * c.conv1_ch * 3 * 3);
    conv2_b = take(c.conv2_ch);
    trunk_w = take(static_cast<size_t>(c.trunk_dim) * c.flat_dim());
    trunk_b = take(c.trunk_dim);
    cls_w = take(static_cast<size_t>(c.num_classes) * c.trunk_dim);
    cls_b = take(c.num_classes);
    proj1_w = take(static_cast<size_t>(c.proj_hidden) * c.trunk_dim);
    proj1_b = take(c.proj_hidden);
    proj2_w = take(static_cast<size_t>(c.embed_dim) * c.proj_hidden);
    proj2_b = take(c.embed_dim);
    total = at;
  }
};

}  // namespace detail

/// Per-batch intermediates kept for the backward pass. `version` ties the
/// cache to the parameter state it was computed from.
struct NetCache {
  std::uint64_t version = 0;
  int n = 0;
  Mat input;       // N x input_dim
  Mat conv1_pre;   // N x c1*s1*s1
  Mat conv2_pre;   // N x c2*s2*s2
  Mat pooled;      // N x flat
  Mat trunk_pre;   // N x t
  Mat proj1_pre;   // N x p
  Mat proj2_out;   // N x e (pre-normalization)
};

struct NetForward {
  Mat logits;      // N x C
  Mat embeddings;  // N x e, unit rows
  NetCache cache;
};

class TinyNet {
 public:
  explicit TinyNet(const NetConfig& cfg, RngStream init_rng = RngStream(0))
      : cfg_(cfg), layout_(cfg), params_(layout_.total, 0.0) {
    cfg.validate();
    init(init_rng);
  }

  const NetConfig& config() const { return cfg_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() {
    ++version_;
    return params_;
  }
  size_t param_count() const { return layout_.total; }
  std::uint64_t version() const { return version_; }

  /// He-style init for the relu layers, smaller scale for the projection
  /// output; biases zero, classifier head zero so a fresh net predicts the
  /// uniform distribution. The projection biases start slightly positive:
  /// with everything at zero, an input that lands every proj1 relu unit in
  /// the dead region would make the pre-normalization embedding exactly the
  /// zero vector, which has no direction to normalize onto.
  void init(RngStream rng) {
    auto fill = [&](size_t off, size_t n, double std) {
      for (size_t i = 0; i < n; ++i) params_[off + i] = std * rng.normal();
    };
    const NetConfig& c = cfg_;
    fill(layout_.conv1_w, static_cast<size_t>(c.conv1_ch) * 75, std::sqrt(2.0 / 75.0));
    fill(layout_.conv2_w, static_cast<size_t>(c.conv2_ch) * c.conv1_ch * 9,
         std::sqrt(2.0 / (c.conv1_ch * 9.0)));
    // Four times the He scale on the trunk: it feeds the zero-initialized
    // classifier, whose logits grow in proportion to the squared feature
    // norm, so a larger trunk init directly shortens the head's warm-up.
    fill(layout_.trunk_w, static_cast<size_t>(c.trunk_dim) * c.flat_dim(),
         4.0 * std::sqrt(2.0 / c.flat_dim()));
    fill(layout_.proj1_w, static_cast<size_t>(c.proj_hidden) * c.trunk_dim,
         std::sqrt(2.0 / c.trunk_dim));
    fill(layout_.proj2_w, static_cast<size_t>(c.embed_dim) * c.proj_hidden,
         std::sqrt(1.0 / c.proj_hidden));
    auto zero = [&](size_t off, size_t n) { std::fill_n(params_.begin() + off, n, 0.0); };
    zero(layout_.conv1_b, c.conv1_ch);
    zero(layout_.conv2_b, c.conv2_ch);
    zero(layout_.trunk_b, c.trunk_dim);
    zero(layout_.cls_w, static_cast<size_t>(c.num_classes) * c.trunk_dim);
    zero(layout_.cls_b, c.num_classes);
    std::fill_n(params_.begin() + layout_.proj1_b, c.proj_hidden, 0.01);
    std::fill_n(params_.begin() + layout_.proj2_b, c.embed_dim, 0.01);
    ++version_;
  }

  NetForward forward(const Mat& x, int threads = 1) const {
    if (x.cols != cfg_.input_dim())
      throw std::invalid_argument("TinyNet::forward: input dimension mismatch");
    const NetConfig& c = cfg_;
    int n = x.rows;
    int s1 = c.conv1_out(), s2 = c.conv2_out();

    NetForward out;
    out.cache.version = version_;
    out.cache.n = n;
    out.cache.input = x;
    out.cache.conv1_pre = Mat(n, c.conv1_ch * s1 * s1);
    out.cache.conv2_pre = Mat(n, c.conv2_ch * s2 * s2);
    out.cache.pooled = Mat(n, c.flat_dim());
    out.cache.trunk_pre = Mat(n, c.trunk_dim);
    out.cache.proj1_pre = Mat(n, c.proj_hidden);
    out.cache.proj2_out = Mat(n, c.embed_dim);
    out.logits = Mat(n, c.num_classes);
    out.embeddings = Mat(n, c.embed_dim);

    // Each item writes only its own rows, so the result is thread-count
    // independent.
    parallel_for(n, threads, [&](int i) { forward_one(x, i, out); });
    return out;
  }

  /// Exact gradients of the scalar loss whose partials w.r.t. logits and
  /// embeddings are supplied. Returns the flat parameter gradient. Per-item
  /// contributions are always reduced in item index order, so the result is
  /// bit-identical for any thread count.
  std::vector<double> backward(const NetCache& cache, const Mat& grad_logits,
                               const Mat& grad_embeddings, int threads = 1) const {
    if (cache.version != version_)
      throw Error("TinyNet::backward: stale cache (parameters changed since forward)");
    if (grad_logits.rows != cache.n || grad_embeddings.rows != cache.n)
      throw std::invalid_argument("TinyNet::backward: gradient row mismatch");
    if (grad_logits.cols != cfg_.num_classes || grad_embeddings.cols != cfg_.embed_dim)
      throw std::invalid_argument("TinyNet::backward: gradient column mismatch");

    std::vector<double> grads(layout_.total, 0.0);
    if (threads <= 1 || cache.n == 1) {
      std::vector<double> item(layout_.total);
      for (int i = 0; i < cache.n; ++i) {
        std::fill(item.begin(), item.end(), 0.0);
        backward_one(cache, i, grad_logits, grad_embeddings, item);
        for (size_t k = 0; k < grads.size(); ++k) grads[k] += item[k];
      }
    } else {
      std::vector<std::vector<double>> bufs(cache.n, std::vector<double>(layout_.total, 0.0));
      parallel_for(cache.n, threads, [&](int i) {
        backward_one(cache, i, grad_logits, grad_embeddings, bufs[i]);
      });
      for (int i = 0; i < cache.n; ++i)
        for (size_t k = 0; k < grads.size(); ++k) grads[k] += bufs[i][k];
    }
    return grads;
  }

  /// Per-item backward into a caller-owned buffer; lets the trainer keep one
  /// buffer per item and reduce them in index order, so results are
  /// bit-identical no matter how items are scheduled across threads.
  void backward_item(const NetCache& cache, int i, const Mat& grad_logits,
                     const Mat& grad_embeddings, std::vector<double>& grad_out) const {
    if (cache.version != version_)
      throw Error("TinyNet::backward: stale cache (parameters changed since forward)");
    backward_one(cache, i, grad_logits, grad_embeddings, grad_out);
  }

 private:
  void forward_one(const Mat& x, int i, NetForward& out) const {
    const NetConfig& c = cfg_;
    int S = c.input_size, s1 = c.conv1_out(), s2 = c.conv2_out(), s3 = c.pool_out();
    const double* in = &x.a[static_cast<size_t>(i) * x.cols];
    const double* p = params_.data();

    // conv1: k5 s4 pad2, 3 -> c1
    double* c1pre = &out.cache.conv1_pre.a[static_cast<size_t>(i) * out.cache.conv1_pre.cols];
    for (int oc = 0; oc < c.conv1_ch; ++oc) {
      const double* w = p + layout_.conv1_w + static_cast<size_t>(oc) * 75;
      double b = p[layout_.conv1_b + oc];
      for (int oy = 0; oy < s1; ++oy)
        for (int ox = 0; ox < s1; ++ox) {
          double acc = b;
          int iy0 = oy * 4 - 2, ix0 = ox * 4 - 2;
          for (int ic = 0; ic < 3; ++ic)
            for (int ky = 0; ky < 5; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= S) continue;
              for (int kx = 0; kx < 5; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= S) continue;
                acc += w[(ic * 5 + ky) * 5 + kx] * in[(ic * S + iy) * S + ix];
              }
            }
          c1pre[(oc * s1 + oy) * s1 + ox] = acc;
        }
    }

    // conv2: k3 s2 pad1, c1 -> c2, relu applied to conv1 activations on read
    double* c2pre = &out.cache.conv2_pre.a[static_cast<size_t>(i) * out.cache.conv2_pre.cols];
    for (int oc = 0; oc < c.conv2_ch; ++oc) {
      const double* w = p + layout_.conv2_w + static_cast<size_t>(oc) * c.conv1_ch * 9;
      double b = p[layout_.conv2_b + oc];
      for (int oy = 0; oy < s2; ++oy)
        for (int ox = 0; ox < s2; ++ox) {
          double acc = b;
          int iy0 = oy * 2 - 1, ix0 = ox * 2 - 1;
          for (int ic = 0; ic < c.conv1_ch; ++ic)
            for (int ky = 0; ky < 3; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= s1) continue;
              for (int kx = 0; kx < 3; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= s1) continue;
                double v = c1pre[(ic * s1 + iy) * s1 + ix];
                if (v > 0.0) acc += w[(ic * 3 + ky) * 3 + kx] * v;
              }
            }
          c2pre[(oc * s2 + oy) * s2 + ox] = acc;
        }
    }

    // 2x2 average pool over relu(conv2) when the spatial size is even
    double* pooled = &out.cache.pooled.a[static_cast<size_t>(i) * out.cache.pooled.cols];
    if (c.pooled()) {
      for (int oc = 0; oc < c.conv2_ch; ++oc)
        for (int oy = 0; oy < s3; ++oy)
          for (int ox = 0; ox < s3; ++ox) {
            double acc = 0.0;
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                double v = c2pre[(oc * s2 + oy * 2 + dy) * s2 + ox * 2 + dx];
                if (v > 0.0) acc += v;
              }
            pooled[(oc * s3 + oy) * s3 + ox] = acc / 4.0;
          }
    } else {
      for (int k = 0; k < c.flat_dim(); ++k) pooled[k] = std::max(0.0, c2pre[k]);
    }

    // trunk linear + relu
    double* tpre = &out.cache.trunk_pre.a[static_cast<size_t>(i) * c.trunk_dim];
    for (int t = 0; t < c.trunk_dim; ++t) {
      const double* w = p + layout_.trunk_w + static_cast<size_t>(t) * c.flat_dim();
      double acc = p[layout_.trunk_b + t];
      for (int k = 0; k < c.flat_dim(); ++k) acc += w[k] * pooled[k];
      tpre[t] = acc;
    }

    // classifier head
    double* logits = &out.logits.a[static_cast<size_t>(i) * c.num_classes];
    for (int k = 0; k < c.num_classes; ++k) {
      const double* w = p + layout_.cls_w + static_cast<size_t>(k) * c.trunk_dim;
      double acc = p[layout_.cls_b + k];
      for (int t = 0; t < c.trunk_dim; ++t) acc += w[t] * std::max(0.0, tpre[t]);
      logits[k] = acc;
    }

    // projection head
    double* p1pre = &out.cache.proj1_pre.a[static_cast<size_t>(i) * c.proj_hidden];
    for (int k = 0; k < c.proj_hidden; ++k) {
      const double* w = p + layout_.proj1_w + static_cast<size_t>(k) * c.trunk_dim;
      double acc = p[layout_.proj1_b + k];
      for (int t = 0; t < c.trunk_dim; ++t) acc += w[t] * std::max(0.0, tpre[t]);
      p1pre[k] = acc;
    }
    double* z = &out.cache.proj2_out.a[static_cast<size_t>(i) * c.embed_dim];
    double norm_sq = 0.0;
    for (int k = 0; k < c.embed_dim; ++k) {
      const double* w = p + layout_.proj2_w + static_cast<size_t>(k) * c.proj_hidden;
      double acc = p[layout_.proj2_b + k];
      for (int h = 0; h < c.proj_hidden; ++h) acc += w[h] * std::max(0.0, p1pre[h]);
      z[k] = acc;
      norm_sq += acc * acc;
    }
    double norm = std::sqrt(norm_sq);
    if (norm < 1e-12)
      throw Error("TinyNet::forward: projection output collapsed to zero norm");
    double* f = &out.embeddings.a[static_cast<size_t>(i) * c.embed_dim];
    for (int k = 0; k < c.embed_dim; ++k) f[k] = z[k] / norm;
  }

  void backward_one(const NetCache& cache, int i, const Mat& grad_logits,
                    const Mat& grad_embeddings, std::vector<double>& g) const {
    const NetConfig& c = cfg_;
    int S = c.input_size, s1 = c.conv1_out(), s2 = c.conv2_out(), s3 = c.pool_out();
    const double* p = params_.data();
    const double* in = &cache.input.a[static_cast<size_t>(i) * cache.input.cols];
    const double* c1pre = &cache.conv1_pre.a[static_cast<size_t>(i) * cache.conv1_pre.cols];
    const double* c2pre = &cache.conv2_pre.a[static_cast<size_t>(i) * cache.conv2_pre.cols];
    const double* pooled = &cache.pooled.a[static_cast<size_t>(i) * cache.pooled.cols];
    const double* tpre = &cache.trunk_pre.a[static_cast<size_t>(i) * c.trunk_dim];
    const double* p1pre = &cache.proj1_pre.a[static_cast<size_t>(i) * c.proj_hidden];
    const double* z = &cache.proj2_out.a[static_cast<size_t>(i) * c.embed_dim];
    const double* gl = &grad_logits.a[static_cast<size_t>(i) * c.num_classes];
    const double* gf = &grad_embeddings.a[static_cast<size_t>(i) * c.embed_dim];

    // normalization: f = z/|z|, g_z = (g_f - (g_f . f) f) / |z|
    double norm_sq = 0.0;
    for (int k = 0; k < c.embed_dim; ++k) norm_sq += z[k] * z[k];
    double norm = std::sqrt(norm_sq);
    std::vector<double> gz(c.embed_dim);
    double dot = 0.0;
    for (int k = 0; k < c.embed_dim; ++k) dot += gf[k] * z[k] / norm;
    for (int k = 0; k < c.embed_dim; ++k) gz[k] = (gf[k] - dot * z[k] / norm) / norm;

    // proj2
    std::vector<double> gp1(c.proj_hidden, 0.0);
    for (int k = 0; k < c.embed_dim; ++k) {
      const double* w = p + layout_.proj2_w + static_cast<size_t>(k) * c.proj_hidden;
      double* gw = g.data() + layout_.proj2_w + static_cast<size_t>(k) * c.proj_hidden;
      for (int h = 0; h < c.proj_hidden; ++h) {
        double act = std::max(0.0, p1pre[h]);
        gw[h] += gz[k] * act;
        if (p1pre[h] > 0.0) gp1[h] += gz[k] * w[h];
      }
      g[layout_.proj2_b + k] += gz[k];
    }

    // proj1 and classifier both feed the trunk activation
    std::vector<double> gh(c.trunk_dim, 0.0);
    for (int k = 0; k < c.proj_hidden; ++k) {
      const double* w = p + layout_.proj1_w + static_cast<size_t>(k) * c.trunk_dim;
      double* gw = g.data() + layout_.proj1_w + static_cast<size_t>(k) * c.trunk_dim;
      for (int t = 0; t < c.trunk_dim; ++t) {
        double act = std::max(0.0, tpre[t]);
        gw[t] += gp1[k] * act;
        gh[t] += gp1[k] * w[t];
      }
      g[layout_.proj1_b + k] += gp1[k];
    }
    for (int k = 0; k < c.num_classes; ++k) {
      const double* w = p + layout_.cls_w + static_cast<size_t>(k) * c.trunk_dim;
      double* gw = g.data() + layout_.cls_w + static_cast<size_t>(k) * c.trunk_dim;
      for (int t = 0; t < c.trunk_dim; ++t) {
        double act = std::max(0.0, tpre[t]);
        gw[t] += gl[k] * act;
        gh[t] += gl[k] * w[t];
      }
      g[layout_.cls_b + k] += gl[k];
    }

    // trunk linear (relu on its pre-activation)
    std::vector<double> gflat(c.flat_dim(), 0.0);
    for (int t = 0; t < c.trunk_dim; ++t) {
      if (tpre[t] <= 0.0) continue;  // relu gate: no gradient flows
      double gt = gh[t];
      const double* w = p + layout_.trunk_w + static_cast<size_t>(t) * c.flat_dim();
      double* gw = g.data() + layout_.trunk_w + static_cast<size_t>(t) * c.flat_dim();
      for (int k = 0; k < c.flat_dim(); ++k) {
        gw[k] += gt * pooled[k];
        gflat[k] += gt * w[k];
      }
      g[layout_.trunk_b + t] += gt;
    }

    // unpool into relu(conv2) space
    std::vector<double> gc2(static_cast<size_t>(c.conv2_ch) * s2 * s2, 0.0);
    if (c.pooled()) {
      for (int oc = 0; oc < c.conv2_ch; ++oc)
        for (int oy = 0; oy < s3; ++oy)
          for (int ox = 0; ox < s3; ++ox) {
            double gv = gflat[(oc * s3 + oy) * s3 + ox] / 4.0;
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                size_t idx = (static_cast<size_t>(oc) * s2 + oy * 2 + dy) * s2 + ox * 2 + dx;
                if (c2pre[idx] > 0.0) gc2[idx] += gv;
              }
          }
    } else {
      for (int k = 0; k < c.flat_dim(); ++k)
        if (c2pre[k] > 0.0) gc2[k] = gflat[k];
    }

    // conv2 backward
    std::vector<double> gc1(static_cast<size_t>(c.conv1_ch) * s1 * s1, 0.0);
    for (int oc = 0; oc < c.conv2_ch; ++oc) {
      const double* w = p + layout_.conv2_w + static_cast<size_t>(oc) * c.conv1_ch * 9;
      double* gw = g.data() + layout_.conv2_w + static_cast<size_t>(oc) * c.conv1_ch * 9;
      for (int oy = 0; oy < s2; ++oy)
        for (int ox = 0; ox < s2; ++ox) {
          double go = gc2[(static_cast<size_t>(oc) * s2 + oy) * s2 + ox];
          if (go == 0.0) continue;
          g[layout_.conv2_b + oc] += go;
          int iy0 = oy * 2 - 1, ix0 = ox * 2 - 1;
          for (int ic = 0; ic < c.conv1_ch; ++ic)
            for (int ky = 0; ky < 3; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= s1) continue;
              for (int kx = 0; kx < 3; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= s1) continue;
                size_t ii = (static_cast<size_t>(ic) * s1 + iy) * s1 + ix;
                double v = c1pre[ii];
                double act = v > 0.0 ? v : 0.0;
                gw[(ic * 3 + ky) * 3 + kx] += go * act;
                if (v > 0.0) gc1[ii] += go * w[(ic * 3 + ky) * 3 + kx];
              }
            }
        }
    }

    // conv1 backward (weights and bias only; input gradients unused)
    for (int oc = 0; oc < c.conv1_ch; ++oc) {
      double* gw = g.data() + layout_.conv1_w + static_cast<size_t>(oc) * 75;
      for (int oy = 0; oy < s1; ++oy)
        for (int ox = 0; ox < s1; ++ox) {
          double go = gc1[(static_cast<size_t>(oc) * s1 + oy) * s1 + ox];
          if (go == 0.0) continue;
          g[layout_.conv1_b + oc] += go;
          int iy0 = oy * 4 - 2, ix0 = ox * 4 - 2;
          for (int ic = 0; ic < 3; ++ic)
            for (int ky = 0; ky < 5; ++ky) {
              int iy = iy0 + ky;
              if (iy < 0 || iy >= S) continue;
              for (int kx = 0; kx < 5; ++kx) {
                int ix = ix0 + kx;
                if (ix < 0 || ix >= S) continue;
                gw[(ic * 5 + ky) * 5 + kx] += go * in[(ic * S + iy) * S + ix];
              }
            }
        }
    }
  }

  NetConfig cfg_;
  detail::ParamLayout layout_;
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct OptimState {
  std::vector<double> momentum_buf;
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;

  explicit OptimState(size_t n_params = 0) : momentum_buf(n_params, 0.0) {}
};

/// buf <- momentum*buf + grad + wd*param; param <- param - lr*buf.
inline void sgd_step(TinyNet& net, const std::vector<double>& grads, OptimState& state) {
  if (grads.size() != net.param_count() || state.momentum_buf.size() != net.param_count())
    throw std::invalid_argument("sgd_step: shape mismatch");
  for (double gv : grads)
    if (!std::isfinite(gv)) throw Error("sgd_step: non-finite gradient, aborting step");
  std::vector<double>& p = net.mutable_params();
  for (size_t k = 0; k < p.size(); ++k) {
    state.momentum_buf[k] =
        state.momentum * state.momentum_buf[k] + grads[k] + state.weight_decay * p[k];
    p[k] -= state.lr * state.momentum_buf[k];
  }
}

/// Hold-then-cosine schedule: flat at lr_initial for the first four fifths
/// of training, then cosine down to lr_final by the last epoch. The hold
/// phase matters for the dynamic-alpha methods, whose supervised term only
/// reaches full weight in late epochs; an immediate decay would starve it.
inline double lr_at(double lr_initial, double lr_final, int epochs, int epoch) {
  if (epochs < 1 || epoch < 0 || epoch >= epochs)
    throw std::invalid_argument("lr_at: epoch out of range");
  if (epochs == 1) return lr_initial;
  int hold = std::min(epochs * 4 / 5, epochs - 2);
  if (epoch < hold) return lr_initial;
  double t = static_cast<double>(epoch - hold) / (epochs - 1 - hold);
  return lr_final + 0.5 * (lr_initial - lr_final) * (1.0 + std::cos(3.141592653589793 * t));
}

/// CHW flattening with the input standardization the trainer feeds the net:
/// center at 0.5 and divide by a nominal pixel std of 0.25. Without the
/// rescale the trunk features come out with norm well under 1, and the
/// zero-initialized classifier head then needs far more steps than the
/// default budget to grow useful logits.
inline std::vector<double> flatten_chw(const ImageRgb& img) {
  std::vector<double> out(static_cast<size_t>(3) * img.width * img.height);
  size_t plane = static_cast<size_t>(img.width) * img.height;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        out[c * plane + static_cast<size_t>(y) * img.width + x] =
            (img.at(x, y, c) - 0.5) / 0.25;
  return out;
}

}  // namespace gdrkit
