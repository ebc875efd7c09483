#pragma once

#include <optional>

#include "fisheyex/distortion.hpp"
#include "fisheyex/image.hpp"
#include "fisheyex/pipeline/model.hpp"

namespace fisheyex::pipeline {

/// Radial scan from the image center: on each of 360 rays, the first radius
/// where the mean intensity of the rest of the ray drops below 0.02; result is
/// the median over rays that found one. Throws full_frame when no ray has a
/// dark tail, detection_failed when the image is dark from the center out.
double detect_valid_radius(const ImageBuffer& img);

/// Stage-1 networks on one polar raster (unit range). Without a generator the
/// input passes through; without a perception network every level is 1.
/// Forward passes only; the model is non-const because graphs bind parameters
/// by reference.
struct Stage1Output {
  ImageBuffer polar_composite;
  DistortionLevelVector level;
};
Stage1Output run_stage1(Model& model, const ImageBuffer& polar, const Mask& band);

struct InferResult {
  ImageBuffer image;      ///< unit range, same size as the input
  ImageBuffer level_map;  ///< single channel, unbounded
  DistortionLevelVector level;
  Mask mask;              ///< 1 on the pixels that were filled
  double r_valid = 0.0;
};

/// to_polar -> outpaint -> perception -> to_cartesian + level map -> revision
/// -> paste the original valid pixels back. The model's grid is used; r_valid
/// comes from detect_valid_radius when not given.
InferResult infer(Model& model, const ImageBuffer& fisheye, std::optional<double> r_valid = std::nullopt);

}  // namespace fisheyex::pipeline
