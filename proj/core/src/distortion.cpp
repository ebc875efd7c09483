#include "fisheyex/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "fisheyex/error.hpp"
#include "fisheyex/rng.hpp"

namespace fisheyex {

std::string format_profile(const DistortionProfile& p) {
  return fmt::format("{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}", p.k[0], p.k[1], p.k[2], p.k[3],
                     p.center_x, p.center_y, p.r_valid);
}

DistortionProfile parse_profile(const std::string& line) {
  std::istringstream in(line);
  DistortionProfile p;
  in >> p.k[0] >> p.k[1] >> p.k[2] >> p.k[3] >> p.center_x >> p.center_y >> p.r_valid;
  if (!in) fail(ErrorCode::unsupported_format, "malformed profile line: " + line);
  return p;
}

void ParamRanges::validate() const {
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(k[i].lo > 0.0) || !(k[i].hi >= k[i].lo)) {
      fail(ErrorCode::invalid_argument, fmt::format("k{} range must satisfy 0 < lo <= hi", i + 1));
    }
  }
}

std::string format_ranges(const ParamRanges& ranges) {
  std::string out;
  for (std::size_t i = 0; i < ranges.k.size(); ++i) {
    const auto& r = ranges.k[i];
    const char* sign = r.sign == SignRule::negative ? "-" : r.sign == SignRule::positive ? "+" : "+-";
    out += fmt::format("{}k{}={}[{:.3g},{:.3g}]", i == 0 ? "" : ",", i + 1, sign, r.lo, r.hi);
  }
  return out;
}

double distortion_level(const DistortionProfile& p, double r) {
  const double s = r * r;
  return 1.0 + s * (p.k[0] + s * (p.k[1] + s * (p.k[2] + s * p.k[3])));
}

bool is_valid_profile(const DistortionProfile& profile, double r_max, const ValidityLimits& limits) {
  if (!(r_max > 0.0)) fail(ErrorCode::invalid_argument, "is_valid_profile needs r_max > 0");
  double previous_source = -1.0;
  for (int i = 0; i < limits.samples; ++i) {
    const double r = r_max * i / (limits.samples - 1);
    const double d = distortion_level(profile, r);
    if (!(d >= limits.d_min && d <= limits.d_max)) return false;
    const double source = r * d;
    if (i > 0 && !(source > previous_source)) return false;
    previous_source = source;
  }
  return true;
}

namespace {

double draw_coefficient(Rng& rng, const CoefficientRange& range) {
  const double magnitude = std::exp(rng.uniform(std::log(range.lo), std::log(range.hi)));
  switch (range.sign) {
    case SignRule::negative: return -magnitude;
    case SignRule::positive: return magnitude;
    case SignRule::either: return rng.coin() ? magnitude : -magnitude;
  }
  return magnitude;
}

}  // namespace

SampledProfile sample_profile(std::uint64_t seed, const ParamRanges& ranges, std::pair<double, double> center,
                              double r_valid, double validate_radius, const ValidityLimits& limits) {
  ranges.validate();
  if (!(r_valid > 0.0)) fail(ErrorCode::invalid_argument, "r_valid must be positive");
  const double radius = validate_radius > 0.0 ? validate_radius : r_valid;
  Rng rng(seed);
  SampledProfile out;
  out.profile.center_x = center.first;
  out.profile.center_y = center.second;
  out.profile.r_valid = r_valid;
  for (;;) {
    for (std::size_t i = 0; i < 4; ++i) out.profile.k[i] = draw_coefficient(rng, ranges.k[i]);
    if (is_valid_profile(out.profile, radius, limits)) return out;
    if (++out.rejections > kMaxProfileRejections) {
      fail(ErrorCode::sampling_failed,
           fmt::format("ranges incompatible with r_valid: no valid profile over radius {} after {} draws", radius,
                       kMaxProfileRejections));
    }
  }
}

namespace {

WarpResult warp_impl(const ImageBuffer& src, const DistortionProfile& profile, int out_height, int out_width,
                     bool cutoff) {
  if (src.empty()) fail(ErrorCode::invalid_argument, "warp of empty image");
  WarpResult result{ImageBuffer(out_height, out_width, src.channels(), src.range()), Mask(out_height, out_width), 0};
  const double src_cx = (src.width() - 1) / 2.0;
  const double src_cy = (src.height() - 1) / 2.0;
  const float black = std::max(range_min(src.range()), 0.0f);
  std::vector<float> pixel(src.channels());
  for (int y = 0; y < out_height; ++y) {
    const double dy = y - profile.center_y;
    for (int x = 0; x < out_width; ++x) {
      const double dx = x - profile.center_x;
      const double r = std::sqrt(dx * dx + dy * dy);
      if (cutoff && r > profile.r_valid) {
        result.mask.set(y, x, true);
        for (int c = 0; c < src.channels(); ++c) result.image.at(y, x, c) = black;
        continue;
      }
      const double d = distortion_level(profile, r);
      const double sx = src_cx + dx * d;
      const double sy = src_cy + dy * d;
      if (sx < 0.0 || sy < 0.0 || sx > src.width() - 1 || sy > src.height() - 1) ++result.out_of_bounds;
      sample_bilinear(src, sx, sy, BorderPolicy::edge_clamp, pixel);
      for (int c = 0; c < src.channels(); ++c) result.image.at(y, x, c) = pixel[c];
    }
  }
  return result;
}

}  // namespace

WarpResult warp_radial(const ImageBuffer& src, const DistortionProfile& profile, int out_height, int out_width) {
  return warp_impl(src, profile, out_height, out_width, false);
}

WarpResult synthesize_fisheye(const ImageBuffer& src, const DistortionProfile& profile, int out_height,
                              int out_width) {
  if (!is_valid_profile(profile, profile.r_valid)) {
    fail(ErrorCode::invalid_profile, "profile is not a valid warp over [0, r_valid]: " + format_profile(profile));
  }
  return warp_impl(src, profile, out_height, out_width, true);
}

Mask circle_mask(int height, int width, double center_x, double center_y, double r_valid) {
  Mask mask(height, width);
  for (int y = 0; y < height; ++y) {
    const double dy = y - center_y;
    for (int x = 0; x < width; ++x) {
      const double dx = x - center_x;
      mask.set(y, x, std::sqrt(dx * dx + dy * dy) > r_valid);
    }
  }
  return mask;
}

double DistortionLevelVector::interpolate(double rho) const {
  if (values.empty()) fail(ErrorCode::invalid_argument, "empty distortion level vector");
  const double n = static_cast<double>(values.size());
  const double u = std::clamp(rho * n / rho_max - 0.5, 0.0, n - 1.0);
  const auto i0 = static_cast<std::size_t>(u);
  const std::size_t i1 = std::min(i0 + 1, values.size() - 1);
  const double f = u - static_cast<double>(i0);
  return (1.0 - f) * values[i0] + f * values[i1];
}

DistortionLevelVector level_vector(const DistortionProfile& profile, int n_rho, double rho_max) {
  if (n_rho < 1) fail(ErrorCode::invalid_argument, "level vector needs n_rho >= 1");
  if (!(rho_max > 0.0)) fail(ErrorCode::invalid_argument, "level vector needs rho_max > 0");
  DistortionLevelVector vec;
  vec.rho_max = rho_max;
  vec.values.resize(static_cast<std::size_t>(n_rho));
  for (std::size_t i = 0; i < vec.values.size(); ++i) {
    vec.values[i] = static_cast<float>(distortion_level(profile, vec.rho_at(i)));
  }
  return vec;
}

ImageBuffer expand_level_map(const DistortionLevelVector& vec, int out_height, int out_width,
                             std::pair<double, double> center) {
  if (vec.values.empty()) fail(ErrorCode::invalid_argument, "empty distortion level vector");
  ImageBuffer map(out_height, out_width, 1, ValueRange::unbounded);
  for (int y = 0; y < out_height; ++y) {
    const double dy = y - center.second;
    for (int x = 0; x < out_width; ++x) {
      const double dx = x - center.first;
      map.at(y, x) = static_cast<float>(vec.interpolate(std::sqrt(dx * dx + dy * dy)));
    }
  }
  return map;
}

}  // namespace fisheyex
