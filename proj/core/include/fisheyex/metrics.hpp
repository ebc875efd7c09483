#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fisheyex/distortion.hpp"
#include "fisheyex/image.hpp"

namespace fisheyex {

struct SymmetryReport {
  double m_hs = 0.0;
  double m_vs = 0.0;
  double m_cs = 0.0;
  std::optional<double> l1;

  /// l1 + m_hs + m_vs + m_cs; without l1 the symmetry terms alone.
  double m_rd() const { return l1.value_or(0.0) + m_hs + m_vs + m_cs; }
};

/// Mean absolute difference between each pixel and its horizontal, vertical and
/// central mirror about `center` (mirror x' = 2 xc - x). Mirrors falling
/// outside the raster are skipped; non-integer mirrors are sampled bilinearly.
SymmetryReport symmetry_metrics(const ImageBuffer& map, std::pair<double, double> center);

double vector_l1(const DistortionLevelVector& pred, const DistortionLevelVector& gt);

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE) with peak = range width; capped at kPsnrCap.
double psnr(const ImageBuffer& a, const ImageBuffer& b);
/// PSNR over pixels where `region` is 1.
double masked_psnr(const ImageBuffer& a, const ImageBuffer& b, const Mask& region);

/// Mean local SSIM on luma (Rec. 601 for RGB), 11x11 Gaussian window with
/// sigma 1.5, K1 = 0.01, K2 = 0.03, valid windows only.
double ssim(const ImageBuffer& a, const ImageBuffer& b);
/// Mean of the SSIM map over windows whose center pixel lies in `region`.
double masked_ssim(const ImageBuffer& a, const ImageBuffer& b, const Mask& region);

/// Ratio of fill-region area (1s) to valid-region area (0s).
double fov_gain(const Mask& mask);

/// Ordered "metric=value" records; the same data backs text and key-value output.
class MetricReport {
 public:
  void add(const std::string& key, double value);
  std::string to_text() const;
  /// Sorted key=value lines.
  std::string to_key_value() const;
  const std::map<std::string, double>& values() const { return values_; }

 private:
  std::vector<std::string> order_;
  std::map<std::string, double> values_;
};

}  // namespace fisheyex
