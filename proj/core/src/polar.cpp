#include "fisheyex/polar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <fmt/core.h>

#include "fisheyex/error.hpp"

namespace fisheyex {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int round_up_to_8(double v) {
  const int n = static_cast<int>(std::ceil(v));
  return (n + 7) / 8 * 8;
}

void check_center(const PolarGrid& grid, int height, int width) {
  if (grid.center_x < 0.0 || grid.center_y < 0.0 || grid.center_x > width - 1 || grid.center_y > height - 1) {
    fail(ErrorCode::invalid_argument, "polar grid center lies outside the image");
  }
}

struct Trig {
  std::vector<double> cos_t;
  std::vector<double> sin_t;
};

Trig column_trig(const PolarGrid& grid) {
  Trig t;
  t.cos_t.resize(grid.n_theta);
  t.sin_t.resize(grid.n_theta);
  for (int j = 0; j < grid.n_theta; ++j) {
    const double theta = grid.theta_at(j);
    t.cos_t[j] = std::cos(theta);
    t.sin_t[j] = std::sin(theta);
  }
  return t;
}

}  // namespace

double PolarGrid::theta_step() const { return kTwoPi / n_theta; }

void PolarGrid::validate() const {
  if (!(rho_max > 0.0)) fail(ErrorCode::invalid_argument, "polar grid needs rho_max > 0");
  if (n_rho < 4 || n_theta < 4) fail(ErrorCode::invalid_argument, "polar grid needs n_rho, n_theta >= 4");
  if (n_theta % 8 != 0) fail(ErrorCode::invalid_argument, "polar grid needs n_theta divisible by 8");
}

std::string format_grid(const PolarGrid& grid) {
  return fmt::format("{:.17g} {:.17g} {:.17g} {} {}", grid.center_x, grid.center_y, grid.rho_max, grid.n_rho,
                     grid.n_theta);
}

PolarGrid parse_grid(const std::string& line) {
  std::istringstream in(line);
  PolarGrid grid;
  in >> grid.center_x >> grid.center_y >> grid.rho_max >> grid.n_rho >> grid.n_theta;
  if (!in) fail(ErrorCode::unsupported_format, "malformed grid line: " + line);
  grid.validate();
  return grid;
}

PolarGrid default_grid(int height, int width) {
  if (height < 8 || width < 8) fail(ErrorCode::invalid_argument, "default_grid needs images of at least 8x8");
  PolarGrid grid;
  grid.center_x = (width - 1) / 2.0;
  grid.center_y = (height - 1) / 2.0;
  grid.rho_max = std::sqrt(0.25 * width * width + 0.25 * height * height);
  grid.n_rho = round_up_to_8(grid.rho_max);
  grid.n_theta = round_up_to_8(kTwoPi * grid.rho_max);
  return grid;
}

ImageBuffer to_polar(const ImageBuffer& img, const PolarGrid& grid) {
  grid.validate();
  check_center(grid, img.height(), img.width());
  ImageBuffer out(grid.n_rho, grid.n_theta, img.channels(), img.range());
  const Trig trig = column_trig(grid);
  std::vector<float> pixel(img.channels());
  for (int i = 0; i < grid.n_rho; ++i) {
    const double rho = grid.rho_at(i);
    for (int j = 0; j < grid.n_theta; ++j) {
      const double x = grid.center_x + rho * trig.cos_t[j];
      const double y = grid.center_y - rho * trig.sin_t[j];
      sample_bilinear(img, x, y, BorderPolicy::edge_clamp, pixel);
      for (int c = 0; c < img.channels(); ++c) out.at(i, j, c) = pixel[c];
    }
  }
  return out;
}

ImageBuffer to_cartesian(const ImageBuffer& polar, const PolarGrid& grid, int out_height, int out_width) {
  grid.validate();
  if (polar.height() != grid.n_rho || polar.width() != grid.n_theta) {
    fail(ErrorCode::shape_mismatch, fmt::format("polar raster {}x{} does not match grid {}x{}", polar.height(),
                                                polar.width(), grid.n_rho, grid.n_theta));
  }
  ImageBuffer out(out_height, out_width, polar.channels(), polar.range());
  const double inv_dtheta = 1.0 / grid.theta_step();
  const double inv_drho = 1.0 / grid.rho_step();
  for (int y = 0; y < out_height; ++y) {
    const double dy = grid.center_y - y;
    for (int x = 0; x < out_width; ++x) {
      const double dx = x - grid.center_x;
      const double rho = std::sqrt(dx * dx + dy * dy);
      double theta = rho == 0.0 ? 0.0 : std::atan2(dy, dx);
      if (theta < 0.0) theta += kTwoPi;
      const double u = theta * inv_dtheta;
      const double v = std::clamp(rho * inv_drho - 0.5, 0.0, grid.n_rho - 1.0);
      const double uf = std::floor(u);
      const double fu = u - uf;
      const int j0 = ((static_cast<int>(uf) % grid.n_theta) + grid.n_theta) % grid.n_theta;
      const int j1 = (j0 + 1) % grid.n_theta;
      const int i0 = static_cast<int>(v);
      const int i1 = std::min(i0 + 1, grid.n_rho - 1);
      const double fv = v - i0;
      for (int c = 0; c < polar.channels(); ++c) {
        const double near = (1.0 - fu) * polar.at(i0, j0, c) + fu * polar.at(i0, j1, c);
        const double far = (1.0 - fu) * polar.at(i1, j0, c) + fu * polar.at(i1, j1, c);
        out.at(y, x, c) = static_cast<float>((1.0 - fv) * near + fv * far);
      }
    }
  }
  return out;
}

Mask to_polar_mask(const Mask& mask, const PolarGrid& grid) {
  grid.validate();
  check_center(grid, mask.height(), mask.width());
  Mask out(grid.n_rho, grid.n_theta);
  const Trig trig = column_trig(grid);
  for (int i = 0; i < grid.n_rho; ++i) {
    const double rho = grid.rho_at(i);
    for (int j = 0; j < grid.n_theta; ++j) {
      const double x = grid.center_x + rho * trig.cos_t[j];
      const double y = grid.center_y - rho * trig.sin_t[j];
      const int xi = std::clamp(static_cast<int>(std::lround(x)), 0, mask.width() - 1);
      const int yi = std::clamp(static_cast<int>(std::lround(y)), 0, mask.height() - 1);
      out.set(i, j, mask.at(yi, xi) >= 0.5f);
    }
  }
  return out;
}

Mask polar_validity(const PolarGrid& grid, int height, int width) {
  grid.validate();
  Mask out(grid.n_rho, grid.n_theta);
  const Trig trig = column_trig(grid);
  for (int i = 0; i < grid.n_rho; ++i) {
    const double rho = grid.rho_at(i);
    for (int j = 0; j < grid.n_theta; ++j) {
      const double x = grid.center_x + rho * trig.cos_t[j];
      const double y = grid.center_y - rho * trig.sin_t[j];
      out.set(i, j, x < -0.5 || y < -0.5 || x > width - 0.5 || y > height - 0.5);
    }
  }
  return out;
}

Mask fill_band(const PolarGrid& grid, double r_valid) {
  grid.validate();
  if (!(r_valid > 0.0 && r_valid < grid.rho_max)) {
    fail(ErrorCode::invalid_argument, "fill_band needs 0 < r_valid < rho_max");
  }
  Mask out(grid.n_rho, grid.n_theta);
  for (int i = 0; i < grid.n_rho; ++i) {
    const bool fill = grid.rho_at(i) > r_valid;
    for (int j = 0; j < grid.n_theta; ++j) out.set(i, j, fill);
  }
  return out;
}

}  // namespace fisheyex
