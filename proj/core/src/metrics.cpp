#include "fisheyex/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "fisheyex/error.hpp"

namespace fisheyex {

SymmetryReport symmetry_metrics(const ImageBuffer& map, std::pair<double, double> center) {
  if (map.channels() != 1) fail(ErrorCode::invalid_argument, "symmetry metrics need a single-channel map");
  const auto [xc, yc] = center;
  if (xc < 0.0 || yc < 0.0 || xc > map.width() - 1 || yc > map.height() - 1) {
    fail(ErrorCode::invalid_argument, "symmetry center lies outside the map");
  }
  const double max_x = map.width() - 1;
  const double max_y = map.height() - 1;
  double sum_h = 0.0, sum_v = 0.0, sum_c = 0.0;
  std::size_t n_h = 0, n_v = 0, n_c = 0;
  for (int y = 0; y < map.height(); ++y) {
    const double my = 2.0 * yc - y;
    const bool y_in = my >= 0.0 && my <= max_y;
    for (int x = 0; x < map.width(); ++x) {
      const double mx = 2.0 * xc - x;
      const bool x_in = mx >= 0.0 && mx <= max_x;
      const double v = map.at(y, x);
      if (x_in) {
        sum_h += std::abs(v - sample_bilinear(map, mx, y, 0, BorderPolicy::edge_clamp));
        ++n_h;
      }
      if (y_in) {
        sum_v += std::abs(v - sample_bilinear(map, x, my, 0, BorderPolicy::edge_clamp));
        ++n_v;
      }
      if (x_in && y_in) {
        sum_c += std::abs(v - sample_bilinear(map, mx, my, 0, BorderPolicy::edge_clamp));
        ++n_c;
      }
    }
  }
  SymmetryReport report;
  report.m_hs = n_h ? sum_h / n_h : 0.0;
  report.m_vs = n_v ? sum_v / n_v : 0.0;
  report.m_cs = n_c ? sum_c / n_c : 0.0;
  return report;
}

double vector_l1(const DistortionLevelVector& pred, const DistortionLevelVector& gt) {
  if (pred.size() != gt.size() || pred.values.empty()) {
    fail(ErrorCode::shape_mismatch, "vector_l1 needs equal, non-empty lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(static_cast<double>(pred.values[i]) - gt.values[i]);
  return sum / static_cast<double>(pred.size());
}

namespace {

void check_same(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
    fail(ErrorCode::shape_mismatch, "metric inputs differ in dimensions");
  }
}

double psnr_from_mse(double mse, double peak) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  check_same(a, b);
  const auto da = a.data();
  const auto db = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    sum += d * d;
  }
  return psnr_from_mse(sum / static_cast<double>(da.size()), range_width(a.range()));
}

double masked_psnr(const ImageBuffer& a, const ImageBuffer& b, const Mask& region) {
  check_same(a, b);
  if (region.height() != a.height() || region.width() != a.width()) {
    fail(ErrorCode::shape_mismatch, "region mask differs in dimensions");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (region.at(y, x) == 0.0f) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = static_cast<double>(a.at(y, x, c)) - b.at(y, x, c);
        sum += d * d;
        ++count;
      }
    }
  }
  if (count == 0) fail(ErrorCode::invalid_argument, "masked PSNR over an empty region");
  return psnr_from_mse(sum / static_cast<double>(count), range_width(a.range()));
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> luma(const ImageBuffer& img) {
  std::vector<double> out(static_cast<std::size_t>(img.height()) * img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width() + x;
      if (img.channels() == 3) {
        out[i] = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
      } else {
        out[i] = img.at(y, x, 0);
      }
    }
  }
  return out;
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

/// Valid-mode separable Gaussian filter; output (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& in, int h, int w) {
  static const auto taps = gaussian_taps();
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * in[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

std::vector<double> ssim_map(const ImageBuffer& a, const ImageBuffer& b) {
  check_same(a, b);
  if (a.channels() != 1 && a.channels() != 3) fail(ErrorCode::invalid_argument, "SSIM needs 1 or 3 channels");
  if (a.height() < kWindow || a.width() < kWindow) {
    fail(ErrorCode::invalid_argument, "SSIM needs images of at least 11x11");
  }
  const int h = a.height();
  const int w = a.width();
  const std::vector<double> la = luma(a);
  const std::vector<double> lb = luma(b);
  std::vector<double> aa(la.size()), bb(la.size()), ab(la.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    aa[i] = la[i] * la[i];
    bb[i] = lb[i] * lb[i];
    ab[i] = la[i] * lb[i];
  }
  const auto mu_a = filter_valid(la, h, w);
  const auto mu_b = filter_valid(lb, h, w);
  const auto e_aa = filter_valid(aa, h, w);
  const auto e_bb = filter_valid(bb, h, w);
  const auto e_ab = filter_valid(ab, h, w);
  const double peak = range_width(a.range());
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  std::vector<double> out(mu_a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    out[i] = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
  }
  return out;
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  const auto map = ssim_map(a, b);
  double sum = 0.0;
  for (double v : map) sum += v;
  return sum / static_cast<double>(map.size());
}

double masked_ssim(const ImageBuffer& a, const ImageBuffer& b, const Mask& region) {
  const auto map = ssim_map(a, b);
  const int ow = a.width() - kWindow + 1;
  const int oh = a.height() - kWindow + 1;
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      if (region.at(y + kWindow / 2, x + kWindow / 2) == 0.0f) continue;
      sum += map[static_cast<std::size_t>(y) * ow + x];
      ++count;
    }
  }
  if (count == 0) fail(ErrorCode::invalid_argument, "masked SSIM over an empty region");
  return sum / static_cast<double>(count);
}

double fov_gain(const Mask& mask) {
  const std::size_t ones = mask.count_ones();
  const std::size_t zeros = mask.size() - ones;
  if (zeros == 0) fail(ErrorCode::invalid_argument, "fov_gain undefined for an all-fill mask");
  return static_cast<double>(ones) / static_cast<double>(zeros);
}

void MetricReport::add(const std::string& key, double value) {
  if (!values_.contains(key)) order_.push_back(key);
  values_[key] = value;
}

std::string MetricReport::to_text() const {
  std::string out;
  for (const auto& key : order_) out += fmt::format("{}={:.6f}\n", key, values_.at(key));
  return out;
}

std::string MetricReport::to_key_value() const {
  std::string out;
  for (const auto& [key, value] : values_) out += fmt::format("{}={}\n", key, value);
  return out;
}

}  // namespace fisheyex
