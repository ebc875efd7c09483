#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fisheyex/pipeline/dataset.hpp"
#include "fisheyex/pipeline/train.hpp"

namespace fisheyex::pipeline {

struct CompareConfig {
  int iters = 1000;
  int batch = 4;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int base_channels = 8;
  int smooth_window = 50;

  void validate() const;
};

struct CompareResult {
  std::vector<LossRow> polar;
  std::vector<LossRow> cartesian;
  /// Last value of the smoothed reconstruction loss.
  double polar_final = 0.0;
  double cartesian_final = 0.0;
  bool polar_wins() const { return polar_final <= cartesian_final; }
  std::string verdict() const;
};

/// Trains the same generator twice from the same seed, adversarial off: on
/// polar rasters (theta wrap on, loss over the fill band) and on Cartesian
/// images (wrap off, loss over the circle complement). Writes
/// polar_loss.txt, cartesian_loss.txt, compare.svg and verdict.txt.
CompareResult compare_domains(const Manifest& manifest, const CompareConfig& config,
                              const std::filesystem::path& out_dir);

}  // namespace fisheyex::pipeline
