#include "fisheyex/pipeline/infer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "fisheyex/ad/graph.hpp"
#include "fisheyex/ad/ops.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/nn/convert.hpp"
#include "fisheyex/polar.hpp"
#include "batch.hpp"

namespace fisheyex::pipeline {

namespace {

constexpr int kRays = 360;
constexpr double kDarkThreshold = 0.02;

double intensity(const ImageBuffer& img, double x, double y) {
  double sum = 0.0;
  for (int c = 0; c < img.channels(); ++c) sum += sample_bilinear(img, x, y, c, BorderPolicy::zero_fill);
  return sum / img.channels();
}

ImageBuffer to_unit(const ImageBuffer& signed_img) {
  ImageBuffer out(signed_img.height(), signed_img.width(), signed_img.channels(), ValueRange::unit);
  const auto src = signed_img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp(0.5f * (src[i] + 1.0f), 0.0f, 1.0f);
  return out;
}

}  // namespace

double detect_valid_radius(const ImageBuffer& img) {
  if (img.empty()) fail(ErrorCode::invalid_argument, "cannot detect a radius on an empty image");
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  std::vector<double> found;
  for (int k = 0; k < kRays; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / kRays;
    const double dx = std::cos(theta), dy = -std::sin(theta);
    std::vector<double> ray;
    for (double r = 0.0;; r += 1.0) {
      const double x = cx + r * dx, y = cy + r * dy;
      if (x < -0.5 || y < -0.5 || x > img.width() - 0.5 || y > img.height() - 0.5) break;
      ray.push_back(intensity(img, x, y));
    }
    // Suffix means, scanned from the center outward.
    std::vector<double> tail(ray.size() + 1, 0.0);
    for (std::size_t i = ray.size(); i-- > 0;) tail[i] = tail[i + 1] + ray[i];
    for (std::size_t i = 0; i < ray.size(); ++i) {
      if (tail[i] / static_cast<double>(ray.size() - i) < kDarkThreshold) {
        found.push_back(static_cast<double>(i));
        break;
      }
    }
  }
  if (found.empty()) fail(ErrorCode::full_frame, "no dark border found on any ray: full-frame image");
  std::sort(found.begin(), found.end());
  const std::size_t m = found.size();
  const double median = m % 2 ? found[m / 2] : 0.5 * (found[m / 2 - 1] + found[m / 2]);
  if (median < 1.0) {
    fail(ErrorCode::detection_failed, "image is dark from the center outward; no valid circle to detect");
  }
  return median;
}

Stage1Output run_stage1(Model& model, const ImageBuffer& polar, const Mask& band) {
  if (polar.height() != model.grid.n_rho || polar.width() != model.grid.n_theta || polar.channels() != 3) {
    fail(ErrorCode::shape_mismatch, "polar raster does not match the model grid");
  }
  const detail::Planar x = detail::to_planar(polar, true);
  const detail::Planar m = detail::to_planar(band);
  const std::vector<detail::Planar> xs{x}, ms{m};
  const std::size_t pick[] = {0};
  Stage1Output out;
  if (model.generator) {
    ad::Graph<float> g;
    ad::ParamStore<float>& p = model.generator->params();
    const ad::Var comp = model.generator->composite(g, p, g.constant(detail::stack(xs, pick)), g.constant(detail::stack(ms, pick)));
    out.polar_composite = to_unit(nn::unstack_image<float>(g.value(comp), g.shape(comp), 0, ValueRange::signed_unit));
  } else {
    out.polar_composite = polar;
  }
  out.level.rho_max = model.grid.rho_max;
  if (model.perception) {
    ad::Graph<float> g;
    ad::ParamStore<float>& p = model.perception->params();
    const ad::Var pred = model.perception->forward(g, p, g.constant(detail::stack(xs, pick)));
    out.level.values.assign(g.value(pred).begin(), g.value(pred).end());
  } else {
    out.level.values.assign(static_cast<std::size_t>(model.grid.n_rho), 1.0f);
  }
  return out;
}

InferResult infer(Model& model, const ImageBuffer& fisheye, std::optional<double> r_valid) {
  if (fisheye.height() != model.height || fisheye.width() != model.width) {
    fail(ErrorCode::shape_mismatch, fmt::format("model expects {}x{} images, got {}x{}", model.height, model.width,
                                                fisheye.height(), fisheye.width()));
  }
  if (fisheye.channels() != 3) fail(ErrorCode::unsupported_format, "inference needs a 3-channel image");
  InferResult res;
  res.r_valid = r_valid ? *r_valid : detect_valid_radius(fisheye);
  const PolarGrid& grid = model.grid;
  if (!(res.r_valid > 0.0 && res.r_valid < grid.rho_max)) {
    fail(ErrorCode::invalid_argument, "valid radius must lie inside the polar grid");
  }
  const int h = fisheye.height(), w = fisheye.width();
  res.mask = circle_mask(h, w, grid.center_x, grid.center_y, res.r_valid);
  const ImageBuffer polar = to_polar(fisheye, grid);
  const Stage1Output s1 = run_stage1(model, polar, fill_band(grid, res.r_valid));
  res.level = s1.level;
  res.level_map = expand_level_map(s1.level, h, w, {grid.center_x, grid.center_y});
  ImageBuffer filled = to_cartesian(s1.polar_composite, grid, h, w);
  if (model.revision) {
    const std::vector<detail::Planar> xs{detail::to_planar(filled, true)};
    const std::vector<detail::Planar> ls{detail::to_planar(res.level_map, false)};
    const std::size_t pick[] = {0};
    ad::Graph<float> g;
    ad::ParamStore<float>& p = model.revision->params();
    const ad::Var out = model.revision->forward(g, p, g.constant(detail::stack(xs, pick)), g.constant(detail::stack(ls, pick)));
    filled = to_unit(nn::unstack_image<float>(g.value(out), g.shape(out), 0, ValueRange::signed_unit));
  }
  res.image = fisheye;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (res.mask.at(y, x) == 0.0f) continue;
      for (int c = 0; c < 3; ++c) res.image.at(y, x, c) = std::clamp(filled.at(y, x, c), 0.0f, 1.0f);
    }
  }
  return res;
}

}  // namespace fisheyex::pipeline
