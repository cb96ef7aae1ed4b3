#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "gdrkit/image.hpp"
#include "gdrkit/rng.hpp"

namespace gdrkit {

// ---------------------------------------------------------------------------
// Transform identifiers and configuration
// ---------------------------------------------------------------------------

enum class Transform : int {
  Brightness = 0,
  Contrast,
  Saturation,
  Hue,
  Sharpness,
  Halo,
  Hole,
  Spot,
  Blur,
};

inline constexpr int kNumTransforms = 9;

inline const char* transform_name(Transform t) {
  static const char* names[kNumTransforms] = {"brightness", "contrast", "saturation",
                                              "hue",        "sharpness", "halo",
                                              "hole",       "spot",      "blur"};
  return names[static_cast<int>(t)];
}

inline std::optional<Transform> transform_from_name(const std::string& name) {
  for (int i = 0; i < kNumTransforms; ++i)
    if (name == transform_name(static_cast<Transform>(i))) return static_cast<Transform>(i);
  return std::nullopt;
}

inline bool is_visual_transform(Transform t) { return static_cast<int>(t) <= 4; }
inline bool is_degradation_transform(Transform t) { return static_cast<int>(t) >= 5; }

/// Reference intensity bounds per transform, used to sanity-check configured
/// ranges. Brightness and the degradation strengths clamp to these with a
/// warning; the remaining ops apply their formula directly and let the value
/// clamp absorb off-range factors.
inline void transform_bounds(Transform t, double& lo, double& hi) {
  switch (t) {
    case Transform::Brightness: lo = -0.5; hi = 0.5; break;
    case Transform::Contrast:   lo = 0.5;  hi = 1.5; break;
    case Transform::Saturation: lo = 0.5;  hi = 1.5; break;
    case Transform::Hue:        lo = -18.0; hi = 18.0; break;
    case Transform::Sharpness:  lo = 0.5;  hi = 1.5; break;
    case Transform::Halo:       lo = 0.0;  hi = 1.0; break;
    case Transform::Hole:       lo = 0.0;  hi = 1.0; break;
    case Transform::Spot:       lo = 0.0;  hi = 1.0; break;
    case Transform::Blur:       lo = 0.1;  hi = 2.0; break;
  }
}

struct TransformConfig {
  bool enabled = true;
  double probability = 0.5;
  double lo = 0.0;
  double hi = 0.0;
};

struct AugConfig {
  std::array<TransformConfig, kNumTransforms> entries;
  std::vector<Transform> order;

  TransformConfig& entry(Transform t) { return entries[static_cast<int>(t)]; }
  const TransformConfig& entry(Transform t) const { return entries[static_cast<int>(t)]; }

  /// Visual adjustments first (scene appearance), then degradations
  /// (imaging chain): brightness, contrast, saturation, hue, sharpness,
  /// halo, hole, spot, blur. Intensity ranges are configuration; these
  /// defaults are plausible for fundus photographs.
  static AugConfig defaults() {
    AugConfig cfg;
    auto set = [&cfg](Transform t, double lo, double hi) {
      cfg.entry(t) = TransformConfig{true, 0.5, lo, hi};
      cfg.order.push_back(t);
    };
    set(Transform::Brightness, -0.2, 0.2);
    set(Transform::Contrast, 0.6, 1.4);
    set(Transform::Saturation, 0.6, 1.4);
    set(Transform::Hue, -18.0, 18.0);
    set(Transform::Sharpness, 0.5, 1.5);
    set(Transform::Halo, 0.2, 0.8);
    set(Transform::Hole, 0.3, 0.8);
    set(Transform::Spot, 0.3, 0.8);
    set(Transform::Blur, 0.1, 1.2);
    return cfg;
  }

  /// All transforms off; composing with this config is the identity.
  static AugConfig disabled() {
    AugConfig cfg = defaults();
    for (auto& e : cfg.entries) {
      e.enabled = false;
      e.probability = 0.0;
    }
    return cfg;
  }

  void validate() const {
    std::array<bool, kNumTransforms> seen{};
    for (Transform t : order) {
      int i = static_cast<int>(t);
      if (seen[i])
        throw std::invalid_argument(std::string("AugConfig: duplicate transform in order: ") +
                                    transform_name(t));
      seen[i] = true;
    }
    for (int i = 0; i < kNumTransforms; ++i) {
      const TransformConfig& e = entries[i];
      if (e.probability < 0.0 || e.probability > 1.0)
        throw std::invalid_argument(std::string("AugConfig: probability outside [0,1] for ") +
                                    transform_name(static_cast<Transform>(i)));
      if (e.lo > e.hi)
        throw std::invalid_argument(std::string("AugConfig: empty intensity range for ") +
                                    transform_name(static_cast<Transform>(i)));
    }
  }
};

// ---------------------------------------------------------------------------
// Realized draws for one invocation (reproducible replay)
// ---------------------------------------------------------------------------

struct HaloGeom {
  double cx = 0, cy = 0;
  double ring_r = 0;   // radius of peak brightness
  double ring_w = 0;   // linear falloff width on both sides
};

struct HoleGeom {
  double cx = 0, cy = 0, radius = 0;
};

struct SpotGeom {
  double cx = 0, cy = 0, radius = 0;
};

struct TransformPlan {
  Transform transform = Transform::Brightness;
  bool applied = false;
  double m = 0.0;
  std::optional<HaloGeom> halo;
  std::optional<HoleGeom> hole;
  std::vector<SpotGeom> spots;
};

struct AugPlan {
  std::vector<TransformPlan> steps;  // one per entry of the config order
};

// ---------------------------------------------------------------------------
// Visual transforms
// ---------------------------------------------------------------------------

namespace detail {
inline double clamp_with_warning(double m, Transform t) {
  double lo, hi;
  transform_bounds(t, lo, hi);
  if (m < lo || m > hi) {
    std::fprintf(stderr, "gdrkit: %s intensity %g outside [%g, %g], clamping\n",
                 transform_name(t), m, lo, hi);
    return std::clamp(m, lo, hi);
  }
  return m;
}
}  // namespace detail

/// v <- clamp(v + m) on every channel.
inline ImageRgb adjust_brightness(const ImageRgb& img, double m) {
  m = detail::clamp_with_warning(m, Transform::Brightness);
  ImageRgb out = img;
  for (double& v : out.data) v = clamp01(v + m);
  return out;
}

/// v <- clamp(mu_c + m*(v - mu_c)) with mu_c the per-channel mean inside the
/// FOV mask (whole image when no mask is attached). A constant image is a
/// fixed point for any factor. m is applied as given; the value clamp
/// absorbs off-range factors.
inline ImageRgb adjust_contrast(const ImageRgb& img, double m) {
  ImageRgb out = img;
  double mu[3] = {0, 0, 0};
  size_t n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!img.mask_at(x, y)) continue;
      for (int c = 0; c < 3; ++c) mu[c] += img.at(x, y, c);
      ++n;
    }
  if (n == 0) return out;
  for (double& v : mu) v /= static_cast<double>(n);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp01(mu[c] + m * (img.at(x, y, c) - mu[c]));
  return out;
}

/// s <- clamp(m*s) in HSV space.
inline ImageRgb adjust_saturation(const ImageRgb& img, double m) {
  ImageRgb out = img;
  for (size_t i = 0; i < out.data.size(); i += 3) {
    HsvPixel p = rgb_to_hsv(out.data[i], out.data[i + 1], out.data[i + 2]);
    p.s = clamp01(m * p.s);
    hsv_to_rgb(p, out.data[i], out.data[i + 1], out.data[i + 2]);
  }
  return out;
}

/// h <- (h + m) mod 360, m in degrees.
inline ImageRgb adjust_hue(const ImageRgb& img, double m) {
  ImageRgb out = img;
  for (size_t i = 0; i < out.data.size(); i += 3) {
    HsvPixel p = rgb_to_hsv(out.data[i], out.data[i + 1], out.data[i + 2]);
    p.h += m;
    hsv_to_rgb(p, out.data[i], out.data[i + 1], out.data[i + 2]);
  }
  return out;
}

namespace detail {
/// 3x3 box blur with clamp-to-edge padding.
inline ImageRgb box_blur3(const ImageRgb& img) {
  ImageRgb out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            int sx = std::clamp(x + dx, 0, img.width - 1);
            int sy = std::clamp(y + dy, 0, img.height - 1);
            acc += img.at(sx, sy, c);
          }
        out.at(x, y, c) = acc / 9.0;
      }
  return out;
}
}  // namespace detail

/// Unsharp-mask blend v <- clamp((1-m)*blur3(v) + m*v); m=1 is the identity,
/// m<1 softens, m>1 sharpens.
inline ImageRgb adjust_sharpness(const ImageRgb& img, double m) {
  ImageRgb blurred = detail::box_blur3(img);
  ImageRgb out = img;
  for (size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = clamp01((1.0 - m) * blurred.data[i] + m * img.data[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Degradation transforms. Halo, hole and spot only touch pixels inside the
// FOV (explicit mask, else the inscribed circle); geometry samplers retry up
// to 8 times to land inside the FOV and skip the transform if they fail.
// ---------------------------------------------------------------------------

namespace detail {

struct FovCircle {
  double cx, cy, r;
};

inline FovCircle fov_circle(const ImageRgb& img) {
  return {(img.width - 1) * 0.5, (img.height - 1) * 0.5,
          std::min(img.width, img.height) * 0.5};
}

inline constexpr int kGeomRetries = 8;

/// Uniform point inside the effective FOV; nullopt after kGeomRetries misses.
inline std::optional<std::pair<double, double>> sample_in_fov(
    const ImageRgb& img, const std::vector<std::uint8_t>& mask, RngStream& rng) {
  for (int i = 0; i < kGeomRetries; ++i) {
    double x = rng.uniform(0.0, static_cast<double>(img.width));
    double y = rng.uniform(0.0, static_cast<double>(img.height));
    int xi = std::min(static_cast<int>(x), img.width - 1);
    int yi = std::min(static_cast<int>(y), img.height - 1);
    if (mask[static_cast<size_t>(yi) * img.width + xi]) return std::make_pair(x, y);
  }
  return std::nullopt;
}

}  // namespace detail

/// Halo center sits within the central third of the FOV; the ring radius and
/// width are fractions of the FOV radius.
inline HaloGeom sample_halo_geom(const ImageRgb& img, RngStream& rng) {
  detail::FovCircle fov = detail::fov_circle(img);
  HaloGeom g;
  double ang = rng.uniform(0.0, 6.283185307179586);
  double rad = fov.r / 3.0 * std::sqrt(rng.uniform());
  g.cx = fov.cx + rad * std::cos(ang);
  g.cy = fov.cy + rad * std::sin(ang);
  g.ring_r = rng.uniform(0.3, 0.9) * fov.r;
  g.ring_w = rng.uniform(0.08, 0.25) * fov.r;
  return g;
}

/// Additive ring of light: v <- clamp(v + m*g(d)) inside the FOV, where
/// g(d) = max(0, 1 - |d - ring_r|/ring_w) peaks on the sampled ring and
/// decays linearly to zero over the sampled width.
inline ImageRgb add_halo(const ImageRgb& img, double m, const HaloGeom& geom) {
  m = detail::clamp_with_warning(m, Transform::Halo);
  ImageRgb out = img;
  if (m == 0.0 || geom.ring_w <= 0.0) return out;
  std::vector<std::uint8_t> mask = effective_mask(img);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!mask[static_cast<size_t>(y) * img.width + x]) continue;
      double d = std::hypot(x - geom.cx, y - geom.cy);
      double g = 1.0 - std::fabs(d - geom.ring_r) / geom.ring_w;
      if (g <= 0.0) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp01(out.at(x, y, c) + m * g);
    }
  return out;
}

inline ImageRgb add_halo(const ImageRgb& img, double m, RngStream& rng) {
  return add_halo(img, m, sample_halo_geom(img, rng));
}

inline std::optional<HoleGeom> sample_hole_geom(const ImageRgb& img, RngStream& rng) {
  std::vector<std::uint8_t> mask = effective_mask(img);
  auto center = detail::sample_in_fov(img, mask, rng);
  if (!center) return std::nullopt;
  HoleGeom g;
  g.cx = center->first;
  g.cy = center->second;
  g.radius = rng.uniform(0.04, 0.12) * img.width;
  return g;
}

inline constexpr double kHoleEdgePx = 2.0;

/// One dark disk: v <- v*(1 - m*s(d)) inside the FOV, s(d) ramping linearly
/// from 1 at d <= radius-2px to 0 at d >= radius.
inline ImageRgb add_hole(const ImageRgb& img, double m, const HoleGeom& geom) {
  m = detail::clamp_with_warning(m, Transform::Hole);
  ImageRgb out = img;
  if (m == 0.0) return out;
  std::vector<std::uint8_t> mask = effective_mask(img);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (!mask[static_cast<size_t>(y) * img.width + x]) continue;
      double d = std::hypot(x - geom.cx, y - geom.cy);
      if (d >= geom.radius) continue;
      double s = std::min(1.0, (geom.radius - d) / kHoleEdgePx);
      double f = 1.0 - m * s;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp01(out.at(x, y, c) * f);
    }
  return out;
}

inline ImageRgb add_hole(const ImageRgb& img, double m, RngStream& rng) {
  auto geom = sample_hole_geom(img, rng);
  return geom ? add_hole(img, m, *geom) : img;
}

inline constexpr double kSpotColor[3] = {1.0, 0.98, 0.90};
inline constexpr double kSpotEdgePx = 1.0;

inline std::vector<SpotGeom> sample_spot_geoms(const ImageRgb& img, RngStream& rng) {
  std::vector<std::uint8_t> mask = effective_mask(img);
  int k = 1 + static_cast<int>(rng.uniform_int(5));
  std::vector<SpotGeom> spots;
  for (int i = 0; i < k; ++i) {
    auto center = detail::sample_in_fov(img, mask, rng);
    double radius = rng.uniform(0.01, 0.03) * img.width;
    if (!center) continue;
    spots.push_back(SpotGeom{center->first, center->second, std::max(radius, 1.0)});
  }
  return spots;
}

/// Bright lens-dust spots alpha-blended at opacity m with a soft 1px edge.
inline ImageRgb add_spot(const ImageRgb& img, double m, const std::vector<SpotGeom>& spots) {
  m = detail::clamp_with_warning(m, Transform::Spot);
  ImageRgb out = img;
  if (m == 0.0 || spots.empty()) return out;
  std::vector<std::uint8_t> mask = effective_mask(img);
  for (const SpotGeom& s : spots) {
    int x0 = std::max(0, static_cast<int>(std::floor(s.cx - s.radius - 1)));
    int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(s.cx + s.radius + 1)));
    int y0 = std::max(0, static_cast<int>(std::floor(s.cy - s.radius - 1)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(s.cy + s.radius + 1)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (!mask[static_cast<size_t>(y) * img.width + x]) continue;
        double d = std::hypot(x - s.cx, y - s.cy);
        if (d >= s.radius) continue;
        double a = m * std::min(1.0, (s.radius - d) / kSpotEdgePx);
        for (int c = 0; c < 3; ++c)
          out.at(x, y, c) = clamp01((1.0 - a) * out.at(x, y, c) + a * kSpotColor[c]);
      }
  }
  return out;
}

inline ImageRgb add_spot(const ImageRgb& img, double m, RngStream& rng) {
  return add_spot(img, m, sample_spot_geoms(img, rng));
}

/// Separable Gaussian, kernel truncated at 3*sigma and renormalized to sum 1;
/// clamp-to-edge padding, mask untouched.
inline ImageRgb blur(const ImageRgb& img, double sigma) {
  if (sigma <= 0.0) {
    std::fprintf(stderr, "gdrkit: blur sigma %g not positive, using 1e-3\n", sigma);
    sigma = 1e-3;
  }
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  ImageRgb tmp = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * img.at(std::clamp(x + i, 0, img.width - 1), y, c);
        tmp.at(x, y, c) = acc;
      }
  ImageRgb out = tmp;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * tmp.at(x, std::clamp(y + i, 0, img.height - 1), c);
        out.at(x, y, c) = clamp01(acc);
      }
  return out;
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

inline ImageRgb apply_step(const ImageRgb& img, const TransformPlan& step) {
  if (!step.applied) return img;
  switch (step.transform) {
    case Transform::Brightness: return adjust_brightness(img, step.m);
    case Transform::Contrast:   return adjust_contrast(img, step.m);
    case Transform::Saturation: return adjust_saturation(img, step.m);
    case Transform::Hue:        return adjust_hue(img, step.m);
    case Transform::Sharpness:  return adjust_sharpness(img, step.m);
    case Transform::Halo:       return step.halo ? add_halo(img, step.m, *step.halo) : img;
    case Transform::Hole:       return step.hole ? add_hole(img, step.m, *step.hole) : img;
    case Transform::Spot:       return add_spot(img, step.m, step.spots);
    case Transform::Blur:       return blur(img, step.m);
  }
  return img;
}

/// Applies every transform of the config order independently with its
/// configured probability and an intensity drawn uniformly from its range.
/// The returned plan records every realized draw; apply_plan replays it
/// exactly.
inline std::pair<ImageRgb, AugPlan> fundus_aug(const ImageRgb& img, const AugConfig& cfg,
                                               RngStream& rng) {
  cfg.validate();
  AugPlan plan;
  ImageRgb out = img;
  for (Transform t : cfg.order) {
    const TransformConfig& e = cfg.entry(t);
    TransformPlan step;
    step.transform = t;
    step.applied = e.enabled && rng.bernoulli(e.probability);
    if (step.applied) {
      step.m = rng.uniform(e.lo, e.hi);
      if (t == Transform::Halo) {
        step.halo = sample_halo_geom(out, rng);
      } else if (t == Transform::Hole) {
        auto geom = sample_hole_geom(out, rng);
        if (geom) step.hole = *geom; else step.applied = false;
      } else if (t == Transform::Spot) {
        step.spots = sample_spot_geoms(out, rng);
        if (step.spots.empty()) step.applied = false;
      }
    }
    if (step.applied) out = apply_step(out, step);
    plan.steps.push_back(std::move(step));
  }
  return {std::move(out), std::move(plan)};
}

/// Replays a recorded plan; bit-identical to the original invocation.
inline ImageRgb apply_plan(const ImageRgb& img, const AugPlan& plan) {
  ImageRgb out = img;
  for (const TransformPlan& step : plan.steps) out = apply_step(out, step);
  return out;
}

// ---------------------------------------------------------------------------
// Weak augmentation: the lightly-augmented second view. Horizontal flip with
// probability 0.5 plus a random crop of 90-100% area resized back to the
// original dimensions. The recipe is isolated here so it can be swapped.
// ---------------------------------------------------------------------------

struct WeakPlan {
  bool flip = false;
  int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;
};

/// The sampled weak view is a slight random rescale-crop and nothing else.
/// No flip: the strong pipeline is purely photometric, so a mirrored weak
/// view would ask the embedding for geometric invariance on top of style
/// invariance, which a net this small buys by discarding spatial detail.
/// Keeping the pair geometry-aligned points the consistency pressure at
/// style alone. apply_weak still honors a caller-built flip plan.
inline WeakPlan sample_weak_plan(int width, int height, RngStream& rng) {
  WeakPlan p;
  p.flip = false;
  double area = rng.uniform(0.95, 1.0);
  double scale = std::sqrt(area);
  p.crop_w = std::max(1, static_cast<int>(std::lround(width * scale)));
  p.crop_h = std::max(1, static_cast<int>(std::lround(height * scale)));
  p.crop_x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(width - p.crop_w) + 1));
  p.crop_y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(height - p.crop_h) + 1));
  return p;
}

inline ImageRgb apply_weak(const ImageRgb& img, const WeakPlan& p) {
  ImageRgb out = img;
  if (p.flip) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    if (img.has_mask())
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          out.fov_mask[static_cast<size_t>(y) * img.width + x] =
              img.fov_mask[static_cast<size_t>(y) * img.width + (img.width - 1 - x)];
  }
  if (p.crop_w == img.width && p.crop_h == img.height) return out;
  ImageRgb crop;
  crop.width = p.crop_w;
  crop.height = p.crop_h;
  crop.data.resize(static_cast<size_t>(p.crop_w) * p.crop_h * 3);
  for (int y = 0; y < p.crop_h; ++y)
    for (int x = 0; x < p.crop_w; ++x)
      for (int c = 0; c < 3; ++c) crop.at(x, y, c) = out.at(x + p.crop_x, y + p.crop_y, c);
  ImageRgb resized = resize_bilinear(crop, img.width, img.height);
  resized.fov_mask = out.fov_mask;  // FOV geometry is treated as unchanged
  return resized;
}

inline ImageRgb weak_augment(const ImageRgb& img, RngStream& rng) {
  return apply_weak(img, sample_weak_plan(img.width, img.height, rng));
}

}  // namespace gdrkit
