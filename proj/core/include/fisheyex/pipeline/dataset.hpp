#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fisheyex/distortion.hpp"
#include "fisheyex/image.hpp"
#include "fisheyex/polar.hpp"

namespace fisheyex::pipeline {

struct DatasetSpec {
  int n = 8;
  std::uint64_t seed = 0;
  int height = 128;
  int width = 128;
  ParamRanges ranges;
  /// 0 keeps the default_grid count.
  int grid_n_rho = 0;
  int grid_n_theta = 0;
  /// 0 means the inscribed circle, min(height, width) / 2.
  double r_valid = 0.0;
  double train_fraction = 0.9;
  /// PNG directory (sorted by name, center-cropped and resized); procedural scenes when empty.
  std::optional<std::filesystem::path> source_dir;
  /// Forces k = 0 for every sample.
  bool identity_profile = false;
};

/// Grid shared by every sample of a dataset built from `spec`.
PolarGrid dataset_grid(const DatasetSpec& spec);
double dataset_r_valid(const DatasetSpec& spec);

struct ManifestSample {
  std::string id;
  std::string split;  ///< "train" or "test"
  std::string fisheye, gt, polar_fisheye, polar_gt, mask, fill_band, validity, profile, level;
};

struct Manifest {
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  double r_valid = 0.0;
  PolarGrid grid;
  ParamRanges ranges;
  std::string source;
  std::vector<ManifestSample> samples;
  /// Directory the sample paths are relative to.
  std::filesystem::path root;

  std::vector<std::size_t> indices(const std::string& split) const;
};

inline constexpr const char* kManifestName = "manifest.fxm";

/// Header row "FXM1" + key=value fields, a column row, one tab-separated row per sample.
std::string format_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& root);

/// Reads `<dir>/manifest.fxm` (or the file itself) and checks every referenced file exists.
Manifest read_manifest(const std::filesystem::path& path);

/// Synthesizes the dataset into `out_dir`, which must be absent or empty. The
/// manifest is written last, through a temporary file and rename, so a
/// directory holding files but no manifest is an interrupted build.
Manifest build_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

/// Loaded sample. Images in unit range; polar rasters hold to_polar of the
/// 8-bit-quantized Cartesian images.
struct SampleData {
  ImageBuffer fisheye, gt, polar_fisheye, polar_gt;
  Mask mask, fill_band, validity;
  DistortionProfile profile;
  DistortionLevelVector level;
};

enum SampleField : unsigned {
  kFisheye = 1u << 0,
  kGroundTruth = 1u << 1,
  kPolarFisheye = 1u << 2,
  kPolarGroundTruth = 1u << 3,
  kMask = 1u << 4,
  kFillBand = 1u << 5,
  kValidity = 1u << 6,
  kProfile = 1u << 7,
  kLevel = 1u << 8,
  kAllFields = (1u << 9) - 1,
};

SampleData load_sample(const Manifest& manifest, std::size_t index, unsigned fields = kAllFields);

/// Full-precision text for ranges, "sign:lo:hi" per coefficient, comma separated.
std::string encode_ranges(const ParamRanges& ranges);
ParamRanges decode_ranges(const std::string& text);

}  // namespace fisheyex::pipeline
