#include "dppn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dppn/rng.hpp"

namespace dppn {

namespace {

struct Pt {
  double x, y;
};

// Strokes are polylines or quadratic beziers over the unit square
// (x right, y down); they get densely sampled before rasterization.
struct Stroke {
  std::vector<Pt> points;   // polyline vertices, or 3 bezier control points
  bool bezier = false;
};

std::vector<Stroke> digit_strokes(int digit) {
  auto line = [](Pt a, Pt b) { return Stroke{{a, b}, false}; };
  auto bez = [](Pt a, Pt c, Pt b) { return Stroke{{a, c, b}, true}; };
  auto circle = [](Pt center, double rx, double ry) {
    Stroke s;
    for (int i = 0; i <= 40; ++i) {
      const double t = 2.0 * M_PI * i / 40.0;
      s.points.push_back({center.x + rx * std::cos(t), center.y + ry * std::sin(t)});
    }
    return s;
  };
  switch (digit) {
    case 0: return {circle({0.5, 0.5}, 0.21, 0.32)};
    case 1: return {line({0.38, 0.28}, {0.52, 0.15}), line({0.52, 0.15}, {0.52, 0.85})};
    case 2:
      return {bez({0.3, 0.32}, {0.5, 0.05}, {0.7, 0.32}),
              bez({0.7, 0.32}, {0.62, 0.62}, {0.3, 0.85}),
              line({0.3, 0.85}, {0.72, 0.85})};
    case 3:
      return {bez({0.3, 0.2}, {0.78, 0.2}, {0.48, 0.48}),
              bez({0.48, 0.48}, {0.84, 0.6}, {0.32, 0.84})};
    case 4:
      return {line({0.6, 0.15}, {0.28, 0.6}), line({0.28, 0.6}, {0.76, 0.6}),
              line({0.62, 0.38}, {0.62, 0.85})};
    case 5:
      return {line({0.68, 0.15}, {0.32, 0.15}), line({0.32, 0.15}, {0.3, 0.45}),
              bez({0.3, 0.45}, {0.85, 0.5}, {0.35, 0.85})};
    case 6:
      return {bez({0.64, 0.14}, {0.3, 0.3}, {0.33, 0.62}),
              circle({0.48, 0.66}, 0.17, 0.18)};
    case 7:
      return {line({0.28, 0.17}, {0.72, 0.17}), line({0.72, 0.17}, {0.42, 0.85})};
    case 8: return {circle({0.5, 0.32}, 0.15, 0.16), circle({0.5, 0.66}, 0.19, 0.19)};
    case 9:
      return {circle({0.48, 0.34}, 0.17, 0.17),
              bez({0.65, 0.34}, {0.68, 0.6}, {0.55, 0.85})};
    default: return {};
  }
}

struct Warp {
  double scale, rot, dx, dy, shear;
  Pt apply(Pt p) const {
    double x = p.x - 0.5, y = p.y - 0.5;
    x += shear * y;
    const double c = std::cos(rot), s = std::sin(rot);
    const double xr = scale * (c * x - s * y);
    const double yr = scale * (s * x + c * y);
    return {xr + 0.5 + dx, yr + 0.5 + dy};
  }
};

std::vector<Pt> sample_stroke(const Stroke& s, const Warp& warp, Rng& rng,
                              double jitter) {
  std::vector<Pt> ctrl;
  ctrl.reserve(s.points.size());
  for (Pt p : s.points) {
    p.x += rng.uniform(-jitter, jitter);
    p.y += rng.uniform(-jitter, jitter);
    ctrl.push_back(warp.apply(p));
  }
  std::vector<Pt> out;
  if (s.bezier && ctrl.size() == 3) {
    for (int i = 0; i <= 24; ++i) {
      const double t = i / 24.0;
      const double u = 1.0 - t;
      out.push_back({u * u * ctrl[0].x + 2 * u * t * ctrl[1].x + t * t * ctrl[2].x,
                     u * u * ctrl[0].y + 2 * u * t * ctrl[1].y + t * t * ctrl[2].y});
    }
  } else {
    for (size_t i = 0; i + 1 < ctrl.size(); ++i) {
      for (int j = 0; j < 8; ++j) {
        const double t = j / 8.0;
        out.push_back({ctrl[i].x + t * (ctrl[i + 1].x - ctrl[i].x),
                       ctrl[i].y + t * (ctrl[i + 1].y - ctrl[i].y)});
      }
    }
    out.push_back(ctrl.back());
  }
  return out;
}

void rasterize(const std::vector<std::vector<Pt>>& strokes, double pen,
               double intensity, std::vector<std::uint8_t>& out) {
  constexpr int side = 28;
  out.resize(side * side);
  const double soft = 0.035;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double px = (c + 0.5) / side;
      const double py = (r + 0.5) / side;
      double d2_min = 1e9;
      for (const auto& pts : strokes) {
        for (const Pt& p : pts) {
          const double dx = px - p.x, dy = py - p.y;
          const double d2 = dx * dx + dy * dy;
          if (d2 < d2_min) d2_min = d2;
        }
      }
      const double d = std::sqrt(d2_min);
      const double a = std::clamp(1.0 - (d - pen) / soft, 0.0, 1.0);
      out[static_cast<size_t>(r) * side + c] = static_cast<std::uint8_t>(
          std::llround(255.0 * intensity * a));
    }
  }
}

void render(const std::vector<Stroke>& strokes, Rng& rng,
            std::vector<std::uint8_t>& out) {
  Warp warp{rng.uniform(0.85, 1.1), rng.uniform(-0.14, 0.14),
            rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
            rng.uniform(-0.12, 0.12)};
  const double pen = rng.uniform(0.018, 0.034);
  const double intensity = rng.uniform(0.82, 1.0);
  std::vector<std::vector<Pt>> sampled;
  sampled.reserve(strokes.size());
  for (const Stroke& s : strokes) {
    sampled.push_back(sample_stroke(s, warp, rng, 0.018));
  }
  rasterize(sampled, pen, intensity, out);
}

}  // namespace

ImageDataset synth_digits(int n, std::uint64_t seed) {
  ImageDataset data;
  data.side = 28;
  data.source = "synthetic digits";
  data.pixels.reserve(static_cast<size_t>(n) * 28 * 28);
  Rng base(seed);
  std::vector<std::uint8_t> img;
  for (int i = 0; i < n; ++i) {
    Rng rng = base.fork(static_cast<std::uint64_t>(i));
    render(digit_strokes(i % 10), rng, img);
    data.pixels.insert(data.pixels.end(), img.begin(), img.end());
  }
  return data;
}

ImageDataset synth_glyphs(int n, std::uint64_t seed) {
  ImageDataset data;
  data.side = 28;
  data.source = "synthetic glyphs";
  data.pixels.reserve(static_cast<size_t>(n) * 28 * 28);
  Rng base(seed);
  std::vector<std::uint8_t> img;
  for (int i = 0; i < n; ++i) {
    Rng rng = base.fork(static_cast<std::uint64_t>(i) | (1ull << 32));
    const int parts = 2 + static_cast<int>(rng.index(3));
    std::vector<Stroke> strokes;
    for (int s = 0; s < parts; ++s) {
      Pt a{rng.uniform(0.2, 0.8), rng.uniform(0.15, 0.85)};
      Pt b{rng.uniform(0.2, 0.8), rng.uniform(0.15, 0.85)};
      if (rng.bernoulli(0.5)) {
        Pt c{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
        strokes.push_back({{a, c, b}, true});
      } else {
        strokes.push_back({{a, b}, false});
      }
    }
    render(strokes, rng, img);
    data.pixels.insert(data.pixels.end(), img.begin(), img.end());
  }
  return data;
}

}  // namespace dppn
