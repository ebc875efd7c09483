#include "fisheyex/pipeline/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fisheyex/error.hpp"
#include "fisheyex/parallel.hpp"
#include "fisheyex/rng.hpp"

namespace fisheyex::pipeline {

namespace {

using Color = std::array<float, 3>;

Color random_color(Rng& rng, double lo, double hi) {
  return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
          static_cast<float>(rng.uniform(lo, hi))};
}

Color mix(const Color& a, const Color& b, double t) {
  Color out;
  for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(a[c] + (b[c] - a[c]) * t);
  return out;
}

void put(ImageBuffer& img, int y, int x, const Color& color, double alpha = 1.0) {
  if (y < 0 || x < 0 || y >= img.height() || x >= img.width()) return;
  for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(img.at(y, x, c) * (1 - alpha) + color[c] * alpha);
}

// Smooth value noise on a coarse lattice, bilinearly interpolated.
struct ValueNoise {
  int cells;
  std::vector<float> lattice;
  ValueNoise(Rng& rng, int cells_) : cells(cells_), lattice(static_cast<std::size_t>(cells_ + 1) * (cells_ + 1)) {
    for (float& v : lattice) v = static_cast<float>(rng.uniform());
  }
  double at(double u, double v) const {
    const double x = std::clamp(u, 0.0, 1.0) * cells;
    const double y = std::clamp(v, 0.0, 1.0) * cells;
    const int x0 = std::min(static_cast<int>(x), cells - 1);
    const int y0 = std::min(static_cast<int>(y), cells - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    auto l = [&](int yy, int xx) { return lattice[static_cast<std::size_t>(yy) * (cells + 1) + xx]; };
    return (l(y0, x0) * (1 - fx) + l(y0, x0 + 1) * fx) * (1 - fy) +
           (l(y0 + 1, x0) * (1 - fx) + l(y0 + 1, x0 + 1) * fx) * fy;
  }
};

}  // namespace

ImageBuffer procedural_scene(std::uint64_t seed, int height, int width) {
  if (height < 8 || width < 8) fail(ErrorCode::invalid_argument, "procedural scenes need at least 8x8 pixels");
  Rng rng(seed);
  ImageBuffer img(height, width, 3, ValueRange::unit);
  const double horizon = height * rng.uniform(0.35, 0.55);
  const double vanish_x = width * rng.uniform(0.3, 0.7);

  const Color sky_top = random_color(rng, 0.35, 0.7);
  const Color sky_low = mix(sky_top, random_color(rng, 0.75, 1.0), 0.7);
  const Color ground_a = random_color(rng, 0.15, 0.45);
  const Color ground_b = random_color(rng, 0.3, 0.6);
  const Color road = random_color(rng, 0.2, 0.35);
  const ValueNoise sky_noise(rng, 4);
  const ValueNoise ground_noise(rng, 16);
  const double road_half = rng.uniform(0.25, 0.45);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width;
      const double v = (y + 0.5) / height;
      Color c;
      if (y < horizon) {
        c = mix(sky_top, sky_low, (y + 0.5) / horizon);
        const double cloud = sky_noise.at(u, v) - 0.5;
        for (float& ch : c) ch = static_cast<float>(ch + 0.15 * cloud);
      } else {
        const double depth = (y + 0.5 - horizon) / (height - horizon);
        c = mix(ground_a, ground_b, ground_noise.at(u, v));
        // Road trapezoid widening toward the viewer.
        if (std::abs(x + 0.5 - vanish_x) < road_half * width * depth) c = mix(road, c, 0.15);
      }
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c[ch];
    }
  }

  // Buildings standing on the horizon.
  const int buildings = static_cast<int>(rng.below(6)) + 3;
  for (int b = 0; b < buildings; ++b) {
    const double bw = width * rng.uniform(0.06, 0.2);
    const double bh = horizon * rng.uniform(0.2, 0.8);
    const double x0 = rng.uniform(-0.1, 1.0) * width;
    const Color wall = random_color(rng, 0.1, 0.9);
    const Color window = mix(wall, random_color(rng, 0.0, 1.0), 0.6);
    const int period = std::max(3, static_cast<int>(bw / 4));
    for (int y = static_cast<int>(horizon - bh); y < static_cast<int>(horizon); ++y) {
      for (int x = static_cast<int>(x0); x < static_cast<int>(x0 + bw); ++x) {
        const bool is_window = (x - static_cast<int>(x0)) % period == period / 2 && y % period < period / 2;
        put(img, y, x, is_window ? window : wall);
      }
    }
  }

  // Lane markings converging on the vanishing point.
  const int lanes = static_cast<int>(rng.below(3)) + 2;
  const Color paint = random_color(rng, 0.85, 1.0);
  for (int l = 0; l < lanes; ++l) {
    const double end_x = vanish_x + (l - (lanes - 1) / 2.0) * width * rng.uniform(0.2, 0.4);
    for (int y = static_cast<int>(std::ceil(horizon)); y < height; ++y) {
      const double t = (y + 0.5 - horizon) / (height - horizon);
      const double x = vanish_x + (end_x - vanish_x) * t;
      const double half = std::max(0.5, 1.5 * t * width / 128.0);
      for (int xx = static_cast<int>(x - half); xx <= static_cast<int>(x + half); ++xx) put(img, y, xx, paint, 0.9);
    }
  }

  // Discs (trees, sun, signs) and poles.
  const int discs = static_cast<int>(rng.below(5)) + 2;
  for (int d = 0; d < discs; ++d) {
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.1, 0.9) * height;
    const double r = rng.uniform(0.03, 0.1) * std::min(height, width);
    const Color fill = random_color(rng, 0.05, 0.95);
    for (int y = static_cast<int>(cy - r); y <= static_cast<int>(cy + r); ++y) {
      for (int x = static_cast<int>(cx - r); x <= static_cast<int>(cx + r); ++x) {
        const double dist = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        if (dist <= r) put(img, y, x, fill, std::clamp(r - dist, 0.0, 1.0));
      }
    }
    if (rng.coin()) {
      const Color pole = random_color(rng, 0.05, 0.4);
      const int px = static_cast<int>(cx);
      for (int y = static_cast<int>(cy + r); y < static_cast<int>(std::max(cy + r, horizon + 0.2 * height)); ++y) {
        put(img, y, px, pole);
        put(img, y, px + 1, pole);
      }
    }
  }
  img.clamp_to_range();
  return img;
}

std::vector<ImageBuffer> procedural_scenes(std::uint64_t seed, int n, int height, int width) {
  if (n < 1) fail(ErrorCode::invalid_argument, "procedural scene count must be >= 1");
  std::vector<ImageBuffer> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), [&](std::size_t i) { out[i] = procedural_scene(mix_seed(seed, i), height, width); });
  return out;
}

}  // namespace fisheyex::pipeline
