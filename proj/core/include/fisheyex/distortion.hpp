#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fisheyex/image.hpp"

namespace fisheyex {

/// Even-polynomial radial model D(r) = 1 + k1 r^2 + k2 r^4 + k3 r^6 + k4 r^8,
/// radii in raw pixels from the optical center.
struct DistortionProfile {
  std::array<double, 4> k{0.0, 0.0, 0.0, 0.0};
  double center_x = 0.0;
  double center_y = 0.0;
  double r_valid = 1.0;

  bool operator==(const DistortionProfile&) const = default;
};

/// One text line "k1 k2 k3 k4 xc yc r_valid", full double precision.
std::string format_profile(const DistortionProfile& profile);
DistortionProfile parse_profile(const std::string& line);

enum class SignRule { negative, either, positive };

struct CoefficientRange {
  double lo = 0.0;  ///< magnitude, > 0
  double hi = 0.0;  ///< magnitude, >= lo
  SignRule sign = SignRule::either;

  bool operator==(const CoefficientRange&) const = default;
};

/// Magnitude intervals for k1..k4. Defaults are the synthesis ranges:
/// k1 in [-1e-4, -1e-8], k2 in +-[1e-12, 1e-8], k3 in +-[1e-16, 1e-12],
/// k4 in +-[1e-20, 1e-16].
struct ParamRanges {
  std::array<CoefficientRange, 4> k{{
      {1e-8, 1e-4, SignRule::negative},
      {1e-12, 1e-8, SignRule::either},
      {1e-16, 1e-12, SignRule::either},
      {1e-20, 1e-16, SignRule::either},
  }};

  bool operator==(const ParamRanges&) const = default;
  void validate() const;
};

std::string format_ranges(const ParamRanges& ranges);

/// Guardrails for a physical warp.
struct ValidityLimits {
  double d_min = 0.05;
  double d_max = 20.0;
  int samples = 1024;
};

/// D(r), Horner's scheme in r^2.
double distortion_level(const DistortionProfile& profile, double r);

/// True iff on `samples` uniform radii over [0, r_max] the level stays within
/// [d_min, d_max] and the source radius r * D(r) is strictly increasing.
bool is_valid_profile(const DistortionProfile& profile, double r_max,
                      const ValidityLimits& limits = {});

struct SampledProfile {
  DistortionProfile profile;
  int rejections = 0;
};

/// Rejection-samples coefficients (log-uniform magnitudes, signs per rule)
/// until the profile is valid over [0, validate_radius]. A non-positive
/// validate_radius means r_valid. Deterministic in `seed`.
SampledProfile sample_profile(std::uint64_t seed, const ParamRanges& ranges,
                              std::pair<double, double> center, double r_valid,
                              double validate_radius = 0.0, const ValidityLimits& limits = {});

inline constexpr int kMaxProfileRejections = 10000;

struct WarpResult {
  ImageBuffer image;
  Mask mask;                         ///< 1 outside the valid circle
  std::size_t out_of_bounds = 0;     ///< samples whose source fell outside src (edge-clamped)
};

/// Backward radial warp over every output pixel: destination p at radius r
/// from the profile center reads src at c_src + (p - c) * D(r), where c_src is
/// the center of src. No circular cutoff; the mask is all zero.
WarpResult warp_radial(const ImageBuffer& src, const DistortionProfile& profile, int out_height,
                       int out_width);

/// warp_radial followed by the circular cutoff: pixels with r > r_valid are
/// black and marked 1 in the mask.
WarpResult synthesize_fisheye(const ImageBuffer& src, const DistortionProfile& profile,
                              int out_height, int out_width);

/// Circle-complement mask: 1 where the distance to center exceeds r_valid.
Mask circle_mask(int height, int width, double center_x, double center_y, double r_valid);

/// Entry i is D at rho_i = (i + 0.5) * rho_max / n.
struct DistortionLevelVector {
  std::vector<float> values;
  double rho_max = 1.0;

  std::size_t size() const noexcept { return values.size(); }
  double rho_at(std::size_t i) const { return (static_cast<double>(i) + 0.5) * rho_max / static_cast<double>(values.size()); }
  /// Linear interpolation at radius rho, clamped to the first/last entry.
  double interpolate(double rho) const;

  bool operator==(const DistortionLevelVector&) const = default;
};

DistortionLevelVector level_vector(const DistortionProfile& profile, int n_rho, double rho_max);

/// 2D single-channel map whose pixel (x, y) is the vector interpolated at the
/// pixel's distance from `center`.
ImageBuffer expand_level_map(const DistortionLevelVector& vec, int out_height, int out_width,
                             std::pair<double, double> center);

}  // namespace fisheyex
