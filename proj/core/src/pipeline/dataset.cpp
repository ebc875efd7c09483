#include "fisheyex/pipeline/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>

#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"
#include "fisheyex/log.hpp"
#include "fisheyex/parallel.hpp"
#include "fisheyex/pipeline/scenes.hpp"
#include "fisheyex/rng.hpp"

namespace fs = std::filesystem;

namespace fisheyex::pipeline {

namespace {

constexpr std::uint64_t kSceneStream = 0;
constexpr std::uint64_t kProfileStream = 1;

const char* const kColumns[] = {"id",   "split",    "fisheye",  "gt",      "polar_fisheye", "polar_gt",
                                "mask", "fill_band", "validity", "profile", "level"};
constexpr std::size_t kColumnCount = std::size(kColumns);

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::vector<std::string*> fields_of(ManifestSample& s) {
  return {&s.id,   &s.split,     &s.fisheye,  &s.gt,      &s.polar_fisheye, &s.polar_gt,
          &s.mask, &s.fill_band, &s.validity, &s.profile, &s.level};
}

std::vector<const std::string*> fields_of(const ManifestSample& s) {
  return {&s.id,   &s.split,     &s.fisheye,  &s.gt,      &s.polar_fisheye, &s.polar_gt,
          &s.mask, &s.fill_band, &s.validity, &s.profile, &s.level};
}

void write_text(const fs::path& path, const std::string& text) {
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  write_bytes(path, bytes);
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

ImageBuffer as_unit(ImageBuffer img) {
  const int h = img.height(), w = img.width(), c = img.channels();
  std::vector<float> data(img.data().begin(), img.data().end());
  return ImageBuffer(h, w, c, std::move(data), ValueRange::unit);
}

std::vector<fs::path> source_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::file_not_found, "source directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void check_output_dir(const fs::path& dir) {
  if (!fs::exists(dir)) return;
  if (!fs::is_directory(dir)) fail(ErrorCode::invalid_argument, "output path is not a directory: " + dir.string());
  if (fs::exists(dir / kManifestName)) {
    fail(ErrorCode::invalid_argument, "output directory already holds a dataset: " + dir.string());
  }
  if (!fs::is_empty(dir)) {
    fail(ErrorCode::partial_output, "output directory holds files but no manifest (interrupted build?): " + dir.string());
  }
}

}  // namespace

double dataset_r_valid(const DatasetSpec& spec) {
  return spec.r_valid > 0.0 ? spec.r_valid : std::min(spec.height, spec.width) / 2.0;
}

PolarGrid dataset_grid(const DatasetSpec& spec) {
  PolarGrid grid = default_grid(spec.height, spec.width);
  if (spec.grid_n_rho > 0) grid.n_rho = spec.grid_n_rho;
  if (spec.grid_n_theta > 0) grid.n_theta = spec.grid_n_theta;
  grid.validate();
  return grid;
}

std::vector<std::size_t> Manifest::indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (split.empty() || samples[i].split == split) out.push_back(i);
  }
  return out;
}

std::string encode_ranges(const ParamRanges& ranges) {
  std::string out;
  for (std::size_t i = 0; i < ranges.k.size(); ++i) {
    const auto& r = ranges.k[i];
    const char* sign = r.sign == SignRule::negative ? "-" : r.sign == SignRule::positive ? "+" : "+-";
    out += fmt::format("{}{}:{:.17g}:{:.17g}", i == 0 ? "" : ",", sign, r.lo, r.hi);
  }
  return out;
}

ParamRanges decode_ranges(const std::string& text) {
  ParamRanges ranges;
  std::istringstream in(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= ranges.k.size()) fail(ErrorCode::unsupported_format, "too many coefficient ranges: " + text);
    const auto a = item.find(':');
    const auto b = item.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      fail(ErrorCode::unsupported_format, "malformed coefficient range: " + item);
    }
    const std::string sign = item.substr(0, a);
    CoefficientRange& r = ranges.k[i++];
    if (sign == "-") {
      r.sign = SignRule::negative;
    } else if (sign == "+") {
      r.sign = SignRule::positive;
    } else if (sign == "+-") {
      r.sign = SignRule::either;
    } else {
      fail(ErrorCode::unsupported_format, "unknown sign rule: " + sign);
    }
    try {
      r.lo = std::stod(item.substr(a + 1, b - a - 1));
      r.hi = std::stod(item.substr(b + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::unsupported_format, "malformed coefficient range: " + item);
    }
  }
  if (i != ranges.k.size()) fail(ErrorCode::unsupported_format, "expected four coefficient ranges: " + text);
  ranges.validate();
  return ranges;
}

std::string format_manifest(const Manifest& m) {
  std::string out = fmt::format("FXM1\tseed={}\theight={}\twidth={}\tr_valid={:.17g}\tgrid={}\tranges={}\tsource={}\n",
                                m.seed, m.height, m.width, m.r_valid, format_grid(m.grid), encode_ranges(m.ranges),
                                m.source);
  for (std::size_t c = 0; c < kColumnCount; ++c) out += fmt::format("{}{}", c == 0 ? "" : "\t", kColumns[c]);
  out += '\n';
  for (const ManifestSample& s : m.samples) {
    const auto f = fields_of(s);
    for (std::size_t c = 0; c < f.size(); ++c) out += fmt::format("{}{}", c == 0 ? "" : "\t", *f[c]);
    out += '\n';
  }
  return out;
}

Manifest parse_manifest(const std::string& text, const fs::path& root) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::unsupported_format, "empty manifest");
  const auto header = split_tabs(line);
  if (header.empty() || header[0] != "FXM1") fail(ErrorCode::bad_magic, "manifest does not start with FXM1");
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto eq = header[i].find('=');
    if (eq == std::string::npos) fail(ErrorCode::unsupported_format, "malformed manifest header field: " + header[i]);
    kv[header[i].substr(0, eq)] = header[i].substr(eq + 1);
  }
  for (const char* key : {"seed", "height", "width", "r_valid", "grid", "ranges", "source"}) {
    if (!kv.contains(key)) fail(ErrorCode::unsupported_format, fmt::format("manifest header lacks '{}'", key));
  }
  Manifest m;
  m.root = root;
  try {
    m.seed = std::stoull(kv["seed"]);
    m.height = std::stoi(kv["height"]);
    m.width = std::stoi(kv["width"]);
    m.r_valid = std::stod(kv["r_valid"]);
  } catch (const std::exception&) {
    fail(ErrorCode::unsupported_format, "malformed numeric field in manifest header");
  }
  m.grid = parse_grid(kv["grid"]);
  m.ranges = decode_ranges(kv["ranges"]);
  m.source = kv["source"];

  if (!std::getline(in, line)) fail(ErrorCode::truncated, "manifest lacks the column row");
  const auto columns = split_tabs(line);
  if (columns.size() != kColumnCount || !std::equal(columns.begin(), columns.end(), std::begin(kColumns))) {
    fail(ErrorCode::unsupported_format, "unexpected manifest columns");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_tabs(line);
    if (cells.size() != kColumnCount) {
      fail(ErrorCode::unsupported_format, fmt::format("manifest row has {} fields, expected {}", cells.size(),
                                                      kColumnCount));
    }
    ManifestSample s;
    const auto f = fields_of(s);
    for (std::size_t c = 0; c < kColumnCount; ++c) *f[c] = cells[c];
    if (s.split != "train" && s.split != "test") fail(ErrorCode::unsupported_format, "unknown split: " + s.split);
    m.samples.push_back(std::move(s));
  }
  return m;
}

Manifest read_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kManifestName : path;
  if (!fs::exists(file)) {
    if (fs::is_directory(path) && !fs::is_empty(path)) {
      fail(ErrorCode::partial_output, "directory holds files but no manifest (interrupted build?): " + path.string());
    }
    fail(ErrorCode::file_not_found, "manifest not found: " + file.string());
  }
  Manifest m = parse_manifest(read_text(file), file.parent_path());
  for (const ManifestSample& s : m.samples) {
    const auto f = fields_of(s);
    for (std::size_t c = 2; c < f.size(); ++c) {
      if (!fs::exists(m.root / *f[c])) {
        fail(ErrorCode::missing_data, fmt::format("sample {} references a missing file: {}", s.id, *f[c]));
      }
    }
  }
  return m;
}

Manifest build_dataset(const DatasetSpec& spec, const fs::path& out_dir) {
  if (spec.n < 1) fail(ErrorCode::invalid_argument, "dataset size must be >= 1");
  if (spec.height < 8 || spec.width < 8) fail(ErrorCode::invalid_argument, "dataset images must be at least 8x8");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
    fail(ErrorCode::invalid_argument, "train fraction must lie in (0, 1]");
  }
  spec.ranges.validate();
  check_output_dir(out_dir);

  Manifest m;
  m.seed = spec.seed;
  m.height = spec.height;
  m.width = spec.width;
  m.r_valid = dataset_r_valid(spec);
  m.grid = dataset_grid(spec);
  m.ranges = spec.ranges;
  m.source = spec.source_dir ? spec.source_dir->string() : "procedural";
  m.root = out_dir;
  if (!(m.r_valid > 0.0 && m.r_valid < m.grid.rho_max)) {
    fail(ErrorCode::invalid_argument, "valid radius must lie inside the polar grid");
  }

  std::vector<fs::path> sources;
  if (spec.source_dir) {
    sources = source_images(*spec.source_dir);
    if (sources.size() < static_cast<std::size_t>(spec.n)) {
      fail(ErrorCode::missing_data, fmt::format("source directory has {} PNG files, {} requested", sources.size(),
                                                spec.n));
    }
  }

  fs::create_directories(out_dir / "samples");
  // At least one training sample, and one held-out sample whenever n > 1 and
  // the fraction is below 1.
  const int max_train = spec.n > 1 && spec.train_fraction < 1.0 ? spec.n - 1 : spec.n;
  const int n_train = std::clamp(static_cast<int>(std::lround(spec.n * spec.train_fraction)), 1, max_train);
  m.samples.resize(static_cast<std::size_t>(spec.n));
  const Mask cart_mask = circle_mask(spec.height, spec.width, m.grid.center_x, m.grid.center_y, m.r_valid);
  const Mask band = fill_band(m.grid, m.r_valid);
  const Mask validity = polar_validity(m.grid, spec.height, spec.width);

  const std::uint64_t scene_seed = mix_seed(spec.seed, kSceneStream);
  const std::uint64_t profile_seed = mix_seed(spec.seed, kProfileStream);
  parallel_for(m.samples.size(), [&](std::size_t i) {
    ManifestSample& s = m.samples[i];
    s.id = fmt::format("s{:05d}", i);
    s.split = static_cast<int>(i) < n_train ? "train" : "test";
    const std::string base = "samples/" + s.id;
    s.fisheye = base + "_fisheye.png";
    s.gt = base + "_gt.png";
    s.polar_fisheye = base + "_polar_fisheye.rtf";
    s.polar_gt = base + "_polar_gt.rtf";
    s.mask = base + "_mask.png";
    s.fill_band = base + "_fill_band.png";
    s.validity = base + "_validity.png";
    s.profile = base + "_profile.txt";
    s.level = base + "_level.rtf";

    const ImageBuffer scene =
        spec.source_dir ? center_crop_resize(read_image(sources[i], true), spec.height, spec.width)
                        : procedural_scene(mix_seed(scene_seed, i), spec.height, spec.width);
    DistortionProfile profile;
    if (spec.identity_profile) {
      profile.center_x = m.grid.center_x;
      profile.center_y = m.grid.center_y;
      profile.r_valid = m.r_valid;
    } else {
      // Validate over the whole rectangle: the ground truth warps the corners too.
      profile = sample_profile(mix_seed(profile_seed, i), spec.ranges, {m.grid.center_x, m.grid.center_y}, m.r_valid,
                               m.grid.rho_max)
                    .profile;
    }
    const ImageBuffer fisheye = quantize_8bit(synthesize_fisheye(scene, profile, spec.height, spec.width).image);
    const ImageBuffer gt = quantize_8bit(warp_radial(scene, profile, spec.height, spec.width).image);
    const DistortionLevelVector level = level_vector(profile, m.grid.n_rho, m.grid.rho_max);

    write_image(out_dir / s.fisheye, fisheye);
    write_image(out_dir / s.gt, gt);
    write_tensor_image(out_dir / s.polar_fisheye, to_polar(fisheye, m.grid));
    write_tensor_image(out_dir / s.polar_gt, to_polar(gt, m.grid));
    write_image(out_dir / s.mask, cart_mask.to_image());
    write_image(out_dir / s.fill_band, band.to_image());
    write_image(out_dir / s.validity, validity.to_image());
    write_text(out_dir / s.profile, format_profile(profile) + "\n");
    write_tensor_image(out_dir / s.level,
                       ImageBuffer(1, static_cast<int>(level.size()), 1, level.values, ValueRange::unbounded));
  });

  const fs::path tmp = out_dir / (std::string(kManifestName) + ".tmp");
  write_text(tmp, format_manifest(m));
  fs::rename(tmp, out_dir / kManifestName);
  log::info("dataset: {} samples ({} train) in {}", spec.n, n_train, out_dir.string());
  return m;
}

SampleData load_sample(const Manifest& m, std::size_t index, unsigned fields) {
  if (index >= m.samples.size()) fail(ErrorCode::invalid_argument, "sample index out of range");
  const ManifestSample& s = m.samples[index];
  SampleData d;
  auto mask = [&](const std::string& rel) { return Mask::from_image(read_image(m.root / rel)); };
  if (fields & kFisheye) d.fisheye = read_image(m.root / s.fisheye, true);
  if (fields & kGroundTruth) d.gt = read_image(m.root / s.gt, true);
  if (fields & kPolarFisheye) d.polar_fisheye = as_unit(read_tensor_image(m.root / s.polar_fisheye));
  if (fields & kPolarGroundTruth) d.polar_gt = as_unit(read_tensor_image(m.root / s.polar_gt));
  if (fields & kMask) d.mask = mask(s.mask);
  if (fields & kFillBand) d.fill_band = mask(s.fill_band);
  if (fields & kValidity) d.validity = mask(s.validity);
  if (fields & kProfile) d.profile = parse_profile(read_text(m.root / s.profile));
  if (fields & kLevel) {
    const ImageBuffer v = read_tensor_image(m.root / s.level);
    if (v.size() != static_cast<std::size_t>(m.grid.n_rho)) {
      fail(ErrorCode::shape_mismatch, fmt::format("sample {} level vector length differs from grid", s.id));
    }
    d.level.values.assign(v.data().begin(), v.data().end());
    d.level.rho_max = m.grid.rho_max;
  }
  if ((fields & kPolarFisheye) && (d.polar_fisheye.height() != m.grid.n_rho || d.polar_fisheye.width() != m.grid.n_theta)) {
    fail(ErrorCode::shape_mismatch, fmt::format("sample {} polar raster does not match the manifest grid", s.id));
  }
  return d;
}

}  // namespace fisheyex::pipeline
