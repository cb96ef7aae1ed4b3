#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gdrkit/common.hpp"

namespace gdrkit {

/// RGB raster with float channels in [0,1]. Channels stay floating point
/// through the whole augmentation chain; quantization to 8 bits happens only
/// at the PNG boundary. fov_mask (optional, 0/1 per pixel) marks the circular
/// field of view of a fundus photograph.
struct ImageRgb {
  int width = 0;
  int height = 0;
  std::vector<double> data;             // width*height*3, row-major RGB
  std::vector<std::uint8_t> fov_mask;   // empty = no mask, else width*height

  ImageRgb() = default;
  ImageRgb(int w, int h)
      : width(w),
        height(h),
        data(static_cast<size_t>(std::max(w, 0)) * static_cast<size_t>(std::max(h, 0)) * 3,
             0.0) {}

  bool has_mask() const { return !fov_mask.empty(); }

  double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }

  bool mask_at(int x, int y) const {
    return fov_mask.empty() || fov_mask[static_cast<size_t>(y) * width + x] != 0;
  }

  static ImageRgb constant(int w, int h, double r, double g, double b) {
    ImageRgb img;
    img.width = w;
    img.height = h;
    img.data.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < img.data.size(); i += 3) {
      img.data[i] = r;
      img.data[i + 1] = g;
      img.data[i + 2] = b;
    }
    return img;
  }
};

struct HsvPixel {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;
  double v = 0.0;
};

/// Standard hexcone conversion. Gray pixels (max == min) take hue 0.
inline HsvPixel rgb_to_hsv(double r, double g, double b) {
  r = clamp01(r);
  g = clamp01(g);
  b = clamp01(b);
  double mx = std::max({r, g, b});
  double mn = std::min({r, g, b});
  double d = mx - mn;
  HsvPixel out;
  out.v = mx;
  out.s = mx > 0.0 ? d / mx : 0.0;
  if (d > 0.0) {
    double h;
    if (mx == r) {
      h = (g - b) / d;
      if (h < 0.0) h += 6.0;
    } else if (mx == g) {
      h = (b - r) / d + 2.0;
    } else {
      h = (r - g) / d + 4.0;
    }
    out.h = h * 60.0;
    if (out.h >= 360.0) out.h -= 360.0;
  }
  return out;
}

inline void hsv_to_rgb(const HsvPixel& p, double& r, double& g, double& b) {
  double h = p.h - 360.0 * std::floor(p.h / 360.0);  // wrap to [0, 360)
  double s = clamp01(p.s);
  double v = clamp01(p.v);
  double c = v * s;
  double hp = h / 60.0;
  double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp)) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

inline std::array<double, 3> hsv_to_rgb(const HsvPixel& p) {
  std::array<double, 3> rgb;
  hsv_to_rgb(p, rgb[0], rgb[1], rgb[2]);
  return rgb;
}

/// Largest inscribed circle, used as the field of view whenever an image
/// carries no explicit mask. Fundus photographs are circularly masked, so
/// degradations and statistics default to this region.
inline std::vector<std::uint8_t> inscribed_fov_mask(int w, int h) {
  std::vector<std::uint8_t> mask(static_cast<size_t>(w) * h, 0);
  double cx = (w - 1) * 0.5;
  double cy = (h - 1) * 0.5;
  double r = std::min(w, h) * 0.5;
  double r2 = r * r;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx = x - cx;
      double dy = y - cy;
      if (dx * dx + dy * dy <= r2) mask[static_cast<size_t>(y) * w + x] = 1;
    }
  }
  return mask;
}

inline std::vector<std::uint8_t> effective_mask(const ImageRgb& img) {
  return img.has_mask() ? img.fov_mask : inscribed_fov_mask(img.width, img.height);
}

/// Bilinear resample with half-pixel-centered sampling; the mask, when
/// present, is resampled by nearest neighbor.
inline ImageRgb resize_bilinear(const ImageRgb& img, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) throw std::invalid_argument("resize_bilinear: zero target dimension");
  ImageRgb out;
  out.width = new_w;
  out.height = new_h;
  out.data.resize(static_cast<size_t>(new_w) * new_h * 3);
  double sx = static_cast<double>(img.width) / new_w;
  double sy = static_cast<double>(img.height) / new_h;
  for (int y = 0; y < new_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    double cy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    int y0 = static_cast<int>(cy);
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = cy - y0;
    for (int x = 0; x < new_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      double cx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      int x0 = static_cast<int>(cx);
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = cx - x0;
      for (int c = 0; c < 3; ++c) {
        double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
        double bot = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = clamp01(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  if (img.has_mask()) {
    out.fov_mask.resize(static_cast<size_t>(new_w) * new_h);
    for (int y = 0; y < new_h; ++y) {
      int sy_i = std::min(static_cast<int>((y + 0.5) * sy), img.height - 1);
      for (int x = 0; x < new_w; ++x) {
        int sx_i = std::min(static_cast<int>((x + 0.5) * sx), img.width - 1);
        out.fov_mask[static_cast<size_t>(y) * new_w + x] =
            img.fov_mask[static_cast<size_t>(sy_i) * img.width + sx_i];
      }
    }
  }
  return out;
}

}  // namespace gdrkit
