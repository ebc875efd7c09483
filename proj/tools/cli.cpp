#include "cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/core.h>

#include "../vendor/CLI11.hpp"
#include "fisheyex/distortion.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"
#include "fisheyex/log.hpp"
#include "fisheyex/metrics.hpp"
#include "fisheyex/parallel.hpp"
#include "fisheyex/pipeline/compare.hpp"
#include "fisheyex/pipeline/dataset.hpp"
#include "fisheyex/pipeline/evaluate.hpp"
#include "fisheyex/pipeline/infer.hpp"
#include "fisheyex/pipeline/model.hpp"
#include "fisheyex/pipeline/train.hpp"
#include "fisheyex/polar.hpp"

#ifndef FISHEYEX_VERSION
#define FISHEYEX_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace fisheyex::cli {

namespace {

using pipeline::Manifest;
using pipeline::Model;

// Every accepted config key with its default. Flags and --config files may
// only set keys listed here.
const std::map<std::string, std::string>& known_keys() {
  static const std::map<std::string, std::string> keys = [] {
    const pipeline::DatasetSpec d;
    const pipeline::TrainConfig t;
    const pipeline::CompareConfig c;
    const ParamRanges r;
    std::map<std::string, std::string> k{
        {"dataset.n", fmt::format("{}", d.n)},
        {"dataset.height", fmt::format("{}", d.height)},
        {"dataset.width", fmt::format("{}", d.width)},
        {"dataset.r_valid", fmt::format("{}", d.r_valid)},
        {"dataset.train_fraction", fmt::format("{}", d.train_fraction)},
        {"dataset.identity_profile", "0"},
        {"grid.n_rho", "0"},
        {"grid.n_theta", "0"},
        {"train.stage", fmt::format("{}", t.stage)},
        {"train.iters", fmt::format("{}", t.iters)},
        {"train.batch", fmt::format("{}", t.batch)},
        {"train.lr", "0"},
        {"train.beta1", fmt::format("{}", t.beta1)},
        {"train.beta2", fmt::format("{}", t.beta2)},
        {"train.lambda_ad", fmt::format("{}", t.weights.adversarial)},
        {"train.lambda_sd", fmt::format("{}", t.weights.distortion)},
        {"train.adversarial", "on"},
        {"train.outpaint", "1"},
        {"train.perception", "1"},
        {"train.checkpoint_every", fmt::format("{}", t.checkpoint_every)},
        {"train.base_channels", fmt::format("{}", t.base_channels)},
        {"train.perception_hidden", fmt::format("{}", t.perception_hidden)},
        {"train.revision_blocks", fmt::format("{}", t.revision_blocks)},
        {"train.critic_channels", fmt::format("{}", t.critic_channels)},
        {"train.n_critic", fmt::format("{}", t.n_critic)},
        {"train.clip", fmt::format("{}", t.clip)},
        {"compare.iters", fmt::format("{}", c.iters)},
        {"compare.batch", fmt::format("{}", c.batch)},
        {"compare.lr", fmt::format("{}", c.lr)},
        {"compare.base_channels", fmt::format("{}", c.base_channels)},
        {"compare.smooth_window", fmt::format("{}", c.smooth_window)},
    };
    for (int i = 0; i < 4; ++i) k[fmt::format("ranges.k{}", i + 1)] = fmt::format("{}:{}", r.k[i].lo, r.k[i].hi);
    return k;
  }();
  return keys;
}

class Settings {
 public:
  Settings() : values_(known_keys()) {}

  void set(const std::string& key, const std::string& value) {
    if (!values_.contains(key)) fail(ErrorCode::invalid_argument, "unknown config key: " + key);
    values_[key] = value;
  }

  void load_file(const fs::path& path) {
    const auto bytes = read_bytes(path);
    for (const auto& [key, value] : pipeline::parse_key_values(std::string(bytes.begin(), bytes.end()))) {
      set(key, value);
    }
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  long long integer(const std::string& key) const {
    const std::string& v = str(key);
    std::size_t used = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) fail(ErrorCode::invalid_argument, fmt::format("{}={} is not an integer", key, v));
    return out;
  }

  int int32(const std::string& key) const {
    const long long v = integer(key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      fail(ErrorCode::invalid_argument, fmt::format("{} is out of range", key));
    }
    return static_cast<int>(v);
  }

  double real(const std::string& key) const {
    const std::string& v = str(key);
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) fail(ErrorCode::invalid_argument, fmt::format("{}={} is not a number", key, v));
    return out;
  }

  bool boolean(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "1" || v == "on" || v == "true") return true;
    if (v == "0" || v == "off" || v == "false") return false;
    fail(ErrorCode::invalid_argument, fmt::format("{}={} is not on/off", key, v));
  }

  /// Keys under the given namespaces, sorted, as key=value lines.
  std::string dump(std::initializer_list<std::string_view> prefixes) const {
    std::string out;
    for (const auto& [key, value] : values_) {
      for (std::string_view p : prefixes) {
        if (key.starts_with(p)) {
          out += key + "=" + value + "\n";
          break;
        }
      }
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

ParamRanges ranges_from(const Settings& s) {
  ParamRanges r;
  for (int i = 0; i < 4; ++i) {
    const std::string key = fmt::format("ranges.k{}", i + 1);
    const std::string& v = s.str(key);
    const auto colon = v.find(':');
    if (colon == std::string::npos) fail(ErrorCode::invalid_argument, key + " must be lo:hi");
    try {
      r.k[i].lo = std::stod(v.substr(0, colon));
      r.k[i].hi = std::stod(v.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, key + " must be lo:hi");
    }
  }
  r.validate();
  return r;
}

// Values the flags carry before they are folded into Settings.
struct Flags {
  std::string in, out, config, ckpt, ref, split, size, adversarial;
  std::uint64_t seed = 0;
  int n = 0, grid_ntheta = 0, grid_nrho = 0, stage = 0, iters = 0, batch = 0, threads = 0, base_channels = 0;
  double lr = 0, lambda_ad = 0, lambda_sd = 0, r_valid = 0;
  bool procedural = false, to_polar = false, to_cartesian = false;
};

struct Command {
  CLI::App* app = nullptr;
  Flags flags;
  bool given(const std::string& name) const {
    const CLI::Option* opt = app->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  }
};

std::pair<int, int> parse_size(const std::string& text) {
  int h = 0, w = 0;
  char sep = 0;
  std::istringstream in(text);
  if (in >> h) {
    if (in >> sep) {
      if ((sep != 'x' && sep != 'X') || !(in >> w)) h = 0;
    } else {
      w = h;
    }
  }
  if (h < 1 || w < 1 || !in.eof()) fail(ErrorCode::invalid_argument, "--size must be N or HxW");
  return {h, w};
}

/// Defaults, then --config, then flags.
Settings settings_for(const Command& c, const std::string& iters_key, const std::string& batch_key,
                      const std::string& lr_key, const std::string& channels_key) {
  Settings s;
  const Flags& f = c.flags;
  if (c.given("--config")) s.load_file(f.config);
  auto put = [&](const char* flag, const std::string& key, const std::string& value) {
    if (c.given(flag) && !key.empty()) s.set(key, value);
  };
  put("--n", "dataset.n", std::to_string(f.n));
  put("--grid-nrho", "grid.n_rho", std::to_string(f.grid_nrho));
  put("--grid-ntheta", "grid.n_theta", std::to_string(f.grid_ntheta));
  put("--r-valid", "dataset.r_valid", fmt::format("{}", f.r_valid));
  put("--stage", "train.stage", std::to_string(f.stage));
  put("--iters", iters_key, std::to_string(f.iters));
  put("--batch", batch_key, std::to_string(f.batch));
  put("--lr", lr_key, fmt::format("{}", f.lr));
  put("--lambda-ad", "train.lambda_ad", fmt::format("{}", f.lambda_ad));
  put("--lambda-sd", "train.lambda_sd", fmt::format("{}", f.lambda_sd));
  put("--adversarial", "train.adversarial", f.adversarial);
  put("--base-channels", channels_key, std::to_string(f.base_channels));
  if (c.given("--size")) {
    const auto [h, w] = parse_size(f.size);
    s.set("dataset.height", std::to_string(h));
    s.set("dataset.width", std::to_string(w));
  }
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

/// Everything needed to repeat the run; output paths are left out so two
/// identical runs into different directories produce identical records.
void write_run_record(const fs::path& path, const std::string& command, const Command& c, const std::string& body) {
  std::string text = fmt::format("fisheyex_version={}\ncommand={}\n", FISHEYEX_VERSION, command);
  if (c.given("--seed")) text += fmt::format("seed={}\n", c.flags.seed);
  if (c.given("--in")) text += "input=" + c.flags.in + "\n";
  if (c.given("--ckpt")) text += "checkpoint=" + c.flags.ckpt + "\n";
  if (c.given("--ref")) text += "reference=" + c.flags.ref + "\n";
  text += body;
  write_text(path, text);
}

void require_seed(const Command& c) {
  if (!c.given("--seed")) fail(ErrorCode::invalid_argument, "--seed is required (all randomness flows from it)");
}

int cmd_synth(const Command& c, std::ostream& out) {
  require_seed(c);
  if (c.flags.procedural && c.given("--in")) fail(ErrorCode::invalid_argument, "--procedural and --in exclude each other");
  const Settings s = settings_for(c, "", "", "", "");
  pipeline::DatasetSpec spec;
  spec.seed = c.flags.seed;
  spec.n = s.int32("dataset.n");
  spec.height = s.int32("dataset.height");
  spec.width = s.int32("dataset.width");
  spec.r_valid = s.real("dataset.r_valid");
  spec.train_fraction = s.real("dataset.train_fraction");
  spec.identity_profile = s.boolean("dataset.identity_profile");
  spec.grid_n_rho = s.int32("grid.n_rho");
  spec.grid_n_theta = s.int32("grid.n_theta");
  spec.ranges = ranges_from(s);
  if (c.given("--in")) spec.source_dir = fs::path(c.flags.in);
  const fs::path dir = c.flags.out;
  const Manifest m = pipeline::build_dataset(spec, dir);
  write_run_record(dir / "run_record.txt", "synth", c, s.dump({"dataset.", "grid.", "ranges."}));
  out << fmt::format("{} samples ({} train, {} test), grid {}\n", m.samples.size(), m.indices("train").size(),
                     m.indices("test").size(), format_grid(m.grid));
  return kOk;
}

bool is_tensor_path(const fs::path& p) { return p.extension() == ".rtf"; }

ImageBuffer read_any(const fs::path& p) { return is_tensor_path(p) ? read_tensor_image(p) : read_image(p); }

void write_any(const fs::path& p, const ImageBuffer& img) {
  if (is_tensor_path(p)) {
    write_tensor_image(p, img);
  } else {
    ImageBuffer clamped = img;
    clamped.clamp_to_range();
    write_image(p, clamped);
  }
}

fs::path sidecar(const fs::path& raster) { return fs::path(raster.string() + ".grid"); }

int cmd_polar(const Command& c, std::ostream& out) {
  const Flags& f = c.flags;
  if (f.to_polar == f.to_cartesian) fail(ErrorCode::invalid_argument, "give exactly one of --to-polar, --to-cartesian");
  const Settings s = settings_for(c, "", "", "", "");
  const fs::path in = f.in;
  const fs::path dst = f.out;
  if (f.to_polar) {
    const ImageBuffer img = read_image(in);
    PolarGrid grid = default_grid(img.height(), img.width());
    if (s.int32("grid.n_rho") > 0) grid.n_rho = s.int32("grid.n_rho");
    if (s.int32("grid.n_theta") > 0) grid.n_theta = s.int32("grid.n_theta");
    grid.validate();
    write_any(dst, to_polar(img, grid));
    write_text(sidecar(dst), fmt::format("grid={}\nheight={}\nwidth={}\nsource={}\n", format_grid(grid), img.height(),
                                         img.width(), fs::absolute(in).string()));
    write_run_record(fs::path(dst.string() + ".run_record.txt"), "polar --to-polar", c, s.dump({"grid."}));
    out << fmt::format("polar raster {}x{} written, grid {}\n", grid.n_rho, grid.n_theta, format_grid(grid));
    return kOk;
  }

  const ImageBuffer polar = read_any(in);
  std::map<std::string, std::string> side;
  if (fs::exists(sidecar(in))) {
    const auto bytes = read_bytes(sidecar(in));
    side = pipeline::parse_key_values(std::string(bytes.begin(), bytes.end()));
  }
  int h = 0, w = 0;
  PolarGrid grid;
  if (side.contains("grid")) {
    grid = parse_grid(side.at("grid"));
    h = std::stoi(side.at("height"));
    w = std::stoi(side.at("width"));
  }
  if (c.given("--size")) {
    std::tie(h, w) = parse_size(f.size);
    if (!side.contains("grid")) grid = default_grid(h, w);
  }
  if (h == 0) fail(ErrorCode::missing_data, "no grid sidecar next to the input; give --size");
  if (c.given("--grid-nrho")) grid.n_rho = f.grid_nrho;
  if (c.given("--grid-ntheta")) grid.n_theta = f.grid_ntheta;
  const ImageBuffer back = to_cartesian(polar, grid, h, w);
  write_any(dst, back);
  write_run_record(fs::path(dst.string() + ".run_record.txt"), "polar --to-cartesian", c, "grid=" + format_grid(grid) + "\n");
  out << fmt::format("cartesian image {}x{} written\n", h, w);

  std::optional<fs::path> ref;
  if (c.given("--ref")) {
    ref = f.ref;
  } else if (side.contains("source") && fs::exists(side.at("source"))) {
    ref = side.at("source");
  }
  if (ref) {
    const ImageBuffer original = read_any(*ref);
    const Mask inside = circle_mask(h, w, grid.center_x, grid.center_y, std::min(h, w) / 2.0).complement();
    // Compare in the source's value range; the reconstruction is clamped to it.
    ImageBuffer recon = is_tensor_path(dst) ? back : read_image(dst);
    recon.clamp_to_range();
    const ImageBuffer a = original.channels() == recon.channels() ? original : original.broadcast_to_rgb();
    out << fmt::format("round_trip_psnr_db={:.2f} (inside the inscribed circle)\n",
                       masked_psnr(recon.converted(a.range()), a, inside));
  }
  return kOk;
}

int cmd_estimate(const Command& c, std::ostream& out) {
  const Settings s = settings_for(c, "", "", "", "");
  Model model = pipeline::load_model(c.flags.ckpt);
  if (!model.perception) fail(ErrorCode::config_mismatch, "checkpoint has no perception network");
  const ImageBuffer img = read_image(c.flags.in, true);
  if (img.height() != model.height || img.width() != model.width) {
    fail(ErrorCode::shape_mismatch, fmt::format("model expects {}x{} images", model.height, model.width));
  }
  const double r_valid = c.given("--r-valid") ? c.flags.r_valid : pipeline::detect_valid_radius(img);
  const PolarGrid& grid = model.grid;
  const auto s1 = pipeline::run_stage1(model, to_polar(img, grid), fill_band(grid, r_valid));
  const ImageBuffer map = expand_level_map(s1.level, img.height(), img.width(), {grid.center_x, grid.center_y});
  SymmetryReport sym = symmetry_metrics(map, {grid.center_x, grid.center_y});
  if (c.given("--ref")) {
    const fs::path ref = c.flags.ref;
    DistortionLevelVector gt;
    if (is_tensor_path(ref)) {
      const ImageBuffer v = read_tensor_image(ref);
      gt = DistortionLevelVector{{v.data().begin(), v.data().end()}, grid.rho_max};
    } else {
      const auto bytes = read_bytes(ref);
      gt = level_vector(parse_profile(std::string(bytes.begin(), bytes.end())), grid.n_rho, grid.rho_max);
    }
    sym.l1 = vector_l1(s1.level, gt);
  }
  const fs::path dir = c.flags.out;
  fs::create_directories(dir);
  write_tensor_image(dir / "level.rtf",
                     ImageBuffer(1, static_cast<int>(s1.level.size()), 1, s1.level.values, ValueRange::unbounded));
  write_tensor_image(dir / "level_map.rtf", map);
  std::string report = fmt::format("r_valid={}\nm_hs={}\nm_vs={}\nm_cs={}\n", r_valid, sym.m_hs, sym.m_vs, sym.m_cs);
  if (sym.l1) report += fmt::format("l1={}\n", *sym.l1);
  write_text(dir / "report.txt", report);
  write_run_record(dir / "run_record.txt", "estimate", c, fmt::format("r_valid={}\n", r_valid) + s.dump({}));
  out << report;
  return kOk;
}

void write_prediction(const fs::path& dir, const std::string& stem, const pipeline::InferResult& r) {
  write_image(dir / (stem + ".png"), r.image);
  write_tensor_image(dir / (stem + "_level.rtf"), r.level_map);
  write_image(dir / (stem + "_mask.png"), r.mask.to_image());
}

int cmd_outpaint(const Command& c, std::ostream& out) {
  Model model = pipeline::load_model(c.flags.ckpt);
  const fs::path in = c.flags.in;
  const fs::path dir = c.flags.out;
  const std::optional<double> r_valid = c.given("--r-valid") ? std::optional(c.flags.r_valid) : std::nullopt;
  fs::create_directories(dir);
  std::size_t count = 0;
  if (fs::is_directory(in)) {
    const Manifest m = pipeline::read_manifest(in);
    const auto idx = m.indices(c.flags.split);
    if (idx.empty()) fail(ErrorCode::missing_data, "no samples in split '" + c.flags.split + "'");
    for (std::size_t i : idx) {
      const ImageBuffer img = read_image(m.root / m.samples[i].fisheye, true);
      write_prediction(dir, m.samples[i].id, pipeline::infer(model, img, r_valid.value_or(m.r_valid)));
      ++count;
    }
  } else {
    const ImageBuffer img = read_image(in, true);
    const auto r = pipeline::infer(model, img, r_valid);
    write_prediction(dir, in.stem().string(), r);
    out << fmt::format("r_valid={}\nfilled_pixels={}\nfov_gain={:.4f}\n", r.r_valid, r.mask.count_ones(),
                       fov_gain(r.mask));
    count = 1;
  }
  write_run_record(dir / "run_record.txt", "outpaint", c,
                   r_valid ? fmt::format("r_valid={}\nsplit={}\n", *r_valid, c.flags.split)
                           : fmt::format("split={}\n", c.flags.split));
  out << fmt::format("{} image(s) written\n", count);
  return kOk;
}

int cmd_train(const Command& c, std::ostream& out) {
  require_seed(c);
  const Settings s = settings_for(c, "train.iters", "train.batch", "train.lr", "train.base_channels");
  pipeline::TrainConfig cfg;
  cfg.stage = s.int32("train.stage");
  cfg.iters = s.int32("train.iters");
  cfg.batch = s.int32("train.batch");
  cfg.lr = s.real("train.lr");
  cfg.beta1 = s.real("train.beta1");
  cfg.beta2 = s.real("train.beta2");
  cfg.seed = c.flags.seed;
  cfg.weights.adversarial = s.real("train.lambda_ad");
  cfg.weights.distortion = s.real("train.lambda_sd");
  cfg.adversarial = s.boolean("train.adversarial");
  cfg.train_outpaint = s.boolean("train.outpaint");
  cfg.train_perception = s.boolean("train.perception");
  cfg.checkpoint_every = s.int32("train.checkpoint_every");
  cfg.base_channels = s.int32("train.base_channels");
  cfg.perception_hidden = s.int32("train.perception_hidden");
  cfg.revision_blocks = s.int32("train.revision_blocks");
  cfg.critic_channels = s.int32("train.critic_channels");
  cfg.n_critic = s.int32("train.n_critic");
  cfg.clip = s.real("train.clip");
  cfg.validate();

  const Manifest m = pipeline::read_manifest(c.flags.in);
  if ((s.int32("grid.n_rho") > 0 && s.int32("grid.n_rho") != m.grid.n_rho) ||
      (s.int32("grid.n_theta") > 0 && s.int32("grid.n_theta") != m.grid.n_theta)) {
    fail(ErrorCode::config_mismatch, "requested grid differs from the dataset grid " + format_grid(m.grid));
  }
  const fs::path dir = c.flags.out;
  fs::create_directories(dir);
  pipeline::TrainResult r;
  if (cfg.stage == 1) {
    r = pipeline::train_stage1(m, cfg, dir);
  } else {
    if (!c.given("--ckpt")) fail(ErrorCode::invalid_argument, "stage 2 needs --ckpt <stage-1 model dir>");
    r = pipeline::train_stage2(m, c.flags.ckpt, cfg, dir);
  }
  write_run_record(dir / "run_record.txt", "train", c, s.dump({"train."}));
  const pipeline::LossRow& last = r.log.back();
  out << fmt::format("stage {} done: {} iterations, final loss_pr={} loss_ad={} loss_sd={}\n", cfg.stage, cfg.iters,
                     last.pr, last.ad, last.sd);
  return kOk;
}

int cmd_eval(const Command& c, std::ostream& out) {
  const Manifest m = pipeline::read_manifest(c.flags.ref);
  const auto report = pipeline::evaluate(c.flags.in, m, c.flags.split);
  const fs::path dir = c.flags.out;
  fs::create_directories(dir);
  write_text(dir / "report.txt", report.to_text());
  write_text(dir / "metrics.txt", report.to_key_value());
  write_run_record(dir / "run_record.txt", "eval", c, "split=" + c.flags.split + "\n");
  out << report.to_text();
  return kOk;
}

int cmd_compare(const Command& c, std::ostream& out) {
  require_seed(c);
  const Settings s = settings_for(c, "compare.iters", "compare.batch", "compare.lr", "compare.base_channels");
  pipeline::CompareConfig cfg;
  cfg.iters = s.int32("compare.iters");
  cfg.batch = s.int32("compare.batch");
  cfg.lr = s.real("compare.lr");
  cfg.base_channels = s.int32("compare.base_channels");
  cfg.smooth_window = s.int32("compare.smooth_window");
  cfg.seed = c.flags.seed;
  const Manifest m = pipeline::read_manifest(c.flags.in);
  const fs::path dir = c.flags.out;
  const auto r = pipeline::compare_domains(m, cfg, dir);
  write_run_record(dir / "run_record.txt", "compare", c, s.dump({"compare."}));
  out << r.verdict();
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::usage:
      return kUsageError;
    case ErrorKind::numeric:
      return kNumericError;
    case ErrorKind::data:
      break;
  }
  return kDataError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fisheye synthesis, polar transforms, distortion estimation and outpainting", "fisheyex"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  int threads = 0;

  auto sub = [&](const char* name, const char* desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("--threads", threads, "Worker cap; 1 is the deterministic reference path")->check(CLI::PositiveNumber);
    return s;
  };
  std::map<std::string, Command> cmds;
  auto common_grid = [](Command& c) {
    c.app->add_option("--grid-nrho", c.flags.grid_nrho, "Polar rows")->check(CLI::PositiveNumber);
    c.app->add_option("--grid-ntheta", c.flags.grid_ntheta, "Polar columns (multiple of 8)")->check(CLI::PositiveNumber);
  };
  auto config_opt = [](Command& c) { c.app->add_option("--config", c.flags.config, "key=value config file")->check(CLI::ExistingFile); };

  {
    Command& c = cmds["synth"];
    c.app = sub("synth", "Build a synthetic dataset");
    c.app->add_option("--out", c.flags.out, "Output directory")->required();
    c.app->add_option("--seed", c.flags.seed, "Master seed");
    c.app->add_option("--n", c.flags.n, "Sample count")->check(CLI::PositiveNumber);
    c.app->add_flag("--procedural", c.flags.procedural, "Procedural scenes (default when --in is absent)");
    c.app->add_option("--in", c.flags.in, "Directory of source PNGs")->check(CLI::ExistingDirectory);
    c.app->add_option("--size", c.flags.size, "Target size, N or HxW");
    c.app->add_option("--r-valid", c.flags.r_valid, "Valid-circle radius in px (default: inscribed)");
    common_grid(c);
    config_opt(c);
  }
  {
    Command& c = cmds["polar"];
    c.app = sub("polar", "Convert one image between Cartesian and polar");
    c.app->add_option("--in", c.flags.in, "Input image (.png or .rtf)")->required()->check(CLI::ExistingFile);
    c.app->add_option("--out", c.flags.out, "Output file (.png or .rtf)")->required();
    c.app->add_flag("--to-polar", c.flags.to_polar, "Cartesian to polar");
    c.app->add_flag("--to-cartesian", c.flags.to_cartesian, "Polar to Cartesian");
    c.app->add_option("--size", c.flags.size, "Cartesian size when no grid sidecar exists");
    c.app->add_option("--ref", c.flags.ref, "Original image for the round-trip PSNR")->check(CLI::ExistingFile);
    common_grid(c);
    config_opt(c);
  }
  {
    Command& c = cmds["estimate"];
    c.app = sub("estimate", "Estimate the radial distortion profile and its symmetry");
    c.app->add_option("--in", c.flags.in, "Fisheye PNG")->required()->check(CLI::ExistingFile);
    c.app->add_option("--ckpt", c.flags.ckpt, "Model directory")->required()->check(CLI::ExistingDirectory);
    c.app->add_option("--out", c.flags.out, "Output directory")->required();
    c.app->add_option("--r-valid", c.flags.r_valid, "Valid-circle radius (default: detected)");
    c.app->add_option("--ref", c.flags.ref, "Ground-truth profile.txt or level .rtf")->check(CLI::ExistingFile);
    config_opt(c);
  }
  {
    Command& c = cmds["outpaint"];
    c.app = sub("outpaint", "Run the full pipeline on a PNG or on every sample of a dataset");
    c.app->add_option("--in", c.flags.in, "Fisheye PNG or dataset directory")->required()->check(CLI::ExistingPath);
    c.app->add_option("--ckpt", c.flags.ckpt, "Model directory")->required()->check(CLI::ExistingDirectory);
    c.app->add_option("--out", c.flags.out, "Output directory")->required();
    c.app->add_option("--r-valid", c.flags.r_valid, "Valid-circle radius (default: dataset value or detected)");
    c.app->add_option("--split", c.flags.split, "Dataset split: train, test or empty for all");
    config_opt(c);
  }
  {
    Command& c = cmds["train"];
    c.app = sub("train", "Train stage 1 (outpainting + perception) or stage 2 (revision)");
    c.app->add_option("--in", c.flags.in, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    c.app->add_option("--out", c.flags.out, "Model output directory")->required();
    c.app->add_option("--seed", c.flags.seed, "Master seed");
    c.app->add_option("--stage", c.flags.stage, "1 or 2");
    c.app->add_option("--iters", c.flags.iters, "Iterations");
    c.app->add_option("--batch", c.flags.batch, "Mini-batch size");
    c.app->add_option("--lr", c.flags.lr, "Learning rate (0 = stage default)");
    c.app->add_option("--lambda-ad", c.flags.lambda_ad, "Adversarial loss weight");
    c.app->add_option("--lambda-sd", c.flags.lambda_sd, "Distortion loss weight");
    c.app->add_option("--adversarial", c.flags.adversarial, "on or off")->check(CLI::IsMember({"on", "off"}));
    c.app->add_option("--ckpt", c.flags.ckpt, "Stage-1 model directory (stage 2)")->check(CLI::ExistingDirectory);
    c.app->add_option("--base-channels", c.flags.base_channels, "Base channel width");
    common_grid(c);
    config_opt(c);
  }
  {
    Command& c = cmds["eval"];
    c.app = sub("eval", "Score predictions against a dataset");
    c.app->add_option("--in", c.flags.in, "Prediction directory (<id>.png, optional <id>_level.rtf)")
        ->required()
        ->check(CLI::ExistingDirectory);
    c.app->add_option("--ref", c.flags.ref, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    c.app->add_option("--out", c.flags.out, "Report directory")->required();
    c.app->add_option("--split", c.flags.split, "Dataset split: train, test or empty for all");
  }
  {
    Command& c = cmds["compare"];
    c.app = sub("compare", "Polar vs Cartesian outpainting convergence");
    c.app->add_option("--in", c.flags.in, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    c.app->add_option("--out", c.flags.out, "Output directory")->required();
    c.app->add_option("--seed", c.flags.seed, "Master seed");
    c.app->add_option("--iters", c.flags.iters, "Iterations per run");
    c.app->add_option("--batch", c.flags.batch, "Mini-batch size");
    c.app->add_option("--lr", c.flags.lr, "Learning rate");
    c.app->add_option("--base-channels", c.flags.base_channels, "Generator base width");
    config_opt(c);
  }
  CLI::App* selftest_app = sub("selftest", "Run oracle and invariant checks");

  if (!args.empty() && !args[0].starts_with("-") && app.get_subcommand_no_throw(args[0]) == nullptr) {
    err << "error: unknown subcommand '" << args[0] << "'\n\n" << app.help();
    return kUsageError;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsageError;
  }

  set_thread_count(threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  try {
    if (selftest_app->parsed()) return selftest(out) ? kOk : kNumericError;
    for (auto& [name, cmd] : cmds) {
      if (!cmd.app->parsed()) continue;
      if (name == "synth") return cmd_synth(cmd, out);
      if (name == "polar") return cmd_polar(cmd, out);
      if (name == "estimate") return cmd_estimate(cmd, out);
      if (name == "outpaint") return cmd_outpaint(cmd, out);
      if (name == "train") return cmd_train(cmd, out);
      if (name == "eval") return cmd_eval(cmd, out);
      if (name == "compare") return cmd_compare(cmd, out);
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace fisheyex::cli
