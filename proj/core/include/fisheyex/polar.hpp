#pragma once

#include <string>

#include "fisheyex/image.hpp"

namespace fisheyex {

/// Binds a Cartesian frame to an (rho, theta) raster. Rows are radii,
/// rho_i = (i + 0.5) * rho_max / n_rho; columns are angles theta_j = j * 2 pi / n_theta,
/// counterclockwise on screen (Cartesian y grows downward, so a sample sits at
/// x = xc + rho cos(theta), y = yc - rho sin(theta)).
struct PolarGrid {
  double center_x = 0.0;
  double center_y = 0.0;
  double rho_max = 1.0;
  int n_rho = 8;
  int n_theta = 8;

  double rho_step() const { return rho_max / n_rho; }
  double theta_step() const;
  double rho_at(int row) const { return (row + 0.5) * rho_max / n_rho; }
  double theta_at(int col) const { return col * theta_step(); }

  /// Throws invalid_argument unless rho_max > 0, n_rho, n_theta >= 4, n_theta % 8 == 0.
  void validate() const;

  bool operator==(const PolarGrid&) const = default;
};

/// Text line "xc yc rho_max n_rho n_theta".
std::string format_grid(const PolarGrid& grid);
PolarGrid parse_grid(const std::string& line);

/// Center at the image center, rho_max the half-diagonal, both counts rounded
/// up to multiples of 8.
PolarGrid default_grid(int height, int width);

ImageBuffer to_polar(const ImageBuffer& img, const PolarGrid& grid);

/// Resamples a polar raster back onto an H x W frame; theta wraps, rho clamps.
ImageBuffer to_cartesian(const ImageBuffer& polar, const PolarGrid& grid, int out_height,
                         int out_width);

/// Nearest-neighbor mask transport into the polar raster.
Mask to_polar_mask(const Mask& mask, const PolarGrid& grid);

/// 1 where the polar sample's Cartesian source lies outside the h x w pixel
/// footprint [-0.5, w - 0.5] x [-0.5, h - 0.5].
Mask polar_validity(const PolarGrid& grid, int height, int width);

/// 1 on every row with rho_i > r_valid. Requires 0 < r_valid < rho_max.
Mask fill_band(const PolarGrid& grid, double r_valid);

}  // namespace fisheyex
