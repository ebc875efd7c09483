#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fisheyex/metrics.hpp"
#include "fisheyex/pipeline/dataset.hpp"

namespace fisheyex::pipeline {

struct SampleScores {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double fill_psnr = 0.0;
  double fill_ssim = 0.0;
  /// Present when `<id>_level.rtf` was found next to the prediction.
  std::optional<SymmetryReport> symmetry;
};

struct EvalReport {
  std::vector<SampleScores> samples;
  /// Arithmetic means over samples; symmetry means over samples that have a level map.
  MetricReport mean;

  /// One row per sample, then the means.
  std::string to_text() const;
  std::string to_key_value() const;
};

/// Scores `<pred_dir>/<id>.png` against each sample's ground truth. The fill
/// region is the Cartesian mask. An empty split selects every sample.
EvalReport evaluate(const std::filesystem::path& pred_dir, const Manifest& manifest, const std::string& split = "");

}  // namespace fisheyex::pipeline
