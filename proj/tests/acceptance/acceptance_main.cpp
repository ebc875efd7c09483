// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when all of them pass.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "cli.hpp"
#include "fisheyex/ad/checkpoint.hpp"
#include "fisheyex/ad/grad_check.hpp"
#include "fisheyex/ad/ops.hpp"
#include "fisheyex/distortion.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"
#include "fisheyex/metrics.hpp"
#include "fisheyex/nn/losses.hpp"
#include "fisheyex/nn/networks.hpp"
#include "fisheyex/parallel.hpp"
#include "fisheyex/pipeline/compare.hpp"
#include "fisheyex/pipeline/dataset.hpp"
#include "fisheyex/pipeline/infer.hpp"
#include "fisheyex/pipeline/train.hpp"
#include "fisheyex/polar.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fisheyex;
using namespace fisheyex::ad;
using namespace fisheyex::pipeline;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_work;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = g_work / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

// 1. Fraction of extra content an inscribed circle leaves in a square frame.
Outcome fov_gain_criterion() {
  DatasetSpec spec;
  spec.n = 2;
  spec.seed = 1;
  spec.height = spec.width = 512;
  const Manifest m = build_dataset(spec, fresh_dir("c1_fov") / "data");
  const double expected = (4.0 - M_PI) / M_PI;
  double worst = 0.0;
  std::string values;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const double gain = fov_gain(load_sample(m, i, kMask).mask);
    worst = std::max(worst, std::abs(gain - expected));
    values += fmt::format("{}{:.4f}", values.empty() ? "" : ", ", gain);
  }
  return {worst <= 0.005, fmt::format("gains [{}] vs {:.4f}, max deviation {:.4f} (tol 0.005)", values, expected, worst)};
}

// 2. Level maps expanded about the grid center have zero symmetry error, both
// for ground-truth vectors and for vectors a perception network predicts.
Outcome symmetry_criterion() {
  std::vector<DistortionLevelVector> vectors;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = sample_profile(s, ParamRanges{}, {63.5, 63.5}, 64.0, 90.6).profile;
    vectors.push_back(level_vector(p, 96, 90.5));
  }
  nn::Perception net({.base_channels = 4, .hidden = 16, .n_rho = 24}, 2);
  net.params().at("fc2.w").data = [] {
    const auto v = random_values(24 * 16, 3, -0.3, 0.3);
    return std::vector<float>(v.begin(), v.end());
  }();
  for (std::uint64_t s = 0; s < 5; ++s) {
    Graph<float> g;
    const auto in = random_values(3 * 24 * 96, 10 + s, 0.0, 1.0);
    const Var pred = net.forward(g, net.params(), g.constant(Shape::nchw(1, 3, 24, 96), {in.begin(), in.end()}));
    vectors.push_back({{g.value(pred).begin(), g.value(pred).end()}, 40.0});
  }
  double total = 0.0;
  int maps = 0;
  for (const auto& v : vectors) {
    for (auto [h, w] : {std::pair{128, 128}, std::pair{96, 160}, std::pair{81, 64}}) {
      const std::pair<double, double> c{(w - 1) / 2.0, (h - 1) / 2.0};
      const SymmetryReport r = symmetry_metrics(expand_level_map(v, h, w, c), c);
      total += r.m_hs + r.m_vs + r.m_cs;
      ++maps;
    }
  }
  return {total == 0.0, fmt::format("{} maps (5 ground-truth and 5 predicted vectors), sum of M_hs+M_vs+M_cs = {}",
                                    maps, total)};
}

// 3. Library warp vs the per-pixel brute-force oracle.
Outcome warp_criterion() {
  const ImageBuffer board = oracle::checkerboard(64, 64, 8);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    DistortionProfile p = sample_profile(100 + s, ParamRanges{}, {31.5, 31.5}, 32.0, 45.3).profile;
    const WarpResult w = synthesize_fisheye(board, p, 64, 64);
    const auto ref = oracle::fisheye_warp(board, p.k, 31.5, 31.5, 32.0, 64, 64);
    for (std::size_t j = 0; j < ref.size(); ++j) worst = std::max(worst, std::abs(ref[j] - w.image.data()[j]));
  }
  return {worst <= 1e-5, fmt::format("10 profiles on 64x64 checkerboards, max abs diff {:.3e} (tol 1e-5)", worst)};
}

// 4. Cartesian -> polar -> Cartesian on smooth noise at the default grid.
Outcome polar_criterion() {
  double worst = 1e9;
  std::string parts;
  std::uint64_t seed = 40;
  for (auto [h, w] : {std::pair{128, 128}, std::pair{64, 64}, std::pair{96, 160}}) {
    const ImageBuffer img = oracle::gaussian_blur(oracle::random_image(h, w, 3, seed++), 2.0);
    const PolarGrid grid = default_grid(h, w);
    const ImageBuffer back = to_cartesian(to_polar(img, grid), grid, h, w);
    const Mask inside = circle_mask(h, w, grid.center_x, grid.center_y, std::min(h, w) / 2.0).complement();
    const double db = masked_psnr(back, img, inside);
    worst = std::min(worst, db);
    parts += fmt::format("{}{}x{}: {:.2f} dB", parts.empty() ? "" : ", ", h, w, db);
  }
  return {worst >= 30.0, fmt::format("{} (min {:.2f}, threshold 30)", parts, worst)};
}

// 5. Finite-difference checks of every op and every network.
struct GradCase {
  std::string name;
  double tol;
  std::function<GradCheckReport()> run;
};

Var project(Graph<double>& g, Var out, std::uint64_t seed) {
  const Shape s = g.shape(out);
  return sum(g, mul(g, out, g.constant(s, random_values(s.numel(), seed))));
}

std::size_t add_random(ParamStore<double>& store, const std::string& name, Shape shape, std::uint64_t seed,
                       double lo = -1.0, double hi = 1.0) {
  const std::size_t i = store.add(name, shape);
  store.at(i).data = random_values(shape.numel(), seed, lo, hi);
  return i;
}

template <typename T>
Var random_input(Graph<T>& g, Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  const auto v = random_values(s.numel(), seed, lo, hi);
  return g.constant(s, std::vector<T>(v.begin(), v.end()));
}

Var binary_mask(Graph<double>& g, Shape s, std::uint64_t seed) {
  auto v = random_values(s.numel(), seed, 0.0, 1.0);
  for (double& x : v) x = x < 0.4 ? 1.0 : 0.0;
  return g.constant(s, std::move(v));
}

const GradCheckOptions kOpOptions{.step = 1e-6, .max_coords_per_tensor = 40, .floor = 1e-3, .seed = 1};
const GradCheckOptions kNetOptions{.step = 1e-6, .max_coords_per_tensor = 8, .floor = 1e-3, .seed = 17};

// Checks `op` applied to one random input tensor, reduced through a projection.
GradCase unary_case(std::string name, Shape shape, std::function<Var(Graph<double>&, Var)> op, double tol = 1e-5) {
  return {name, tol, [=] {
            ParamStore<double> store;
            const auto ix = add_random(store, "x", shape, 5);
            return grad_check([&](Graph<double>& g) { return project(g, op(g, g.parameter(store.at(ix))), 7); },
                              store, kOpOptions);
          }};
}

GradCase conv_case(std::string name, ConvOptions opt, int k, int h, int w) {
  return {name, 1e-5, [=] {
            ParamStore<double> store;
            const auto ix = add_random(store, "x", Shape::nchw(2, 3, h, w), 1);
            const auto iw = add_random(store, "w", Shape::nchw(4, 3, k, k), 2);
            const auto ib = add_random(store, "b", Shape::vector(4), 3);
            return grad_check(
                [&](Graph<double>& g) {
                  return project(g, conv2d(g, g.parameter(store.at(ix)), g.parameter(store.at(iw)),
                                           g.parameter(store.at(ib)), opt), 4);
                },
                store, kOpOptions);
          }};
}

std::vector<GradCase> grad_cases() {
  std::vector<GradCase> cases;
  cases.push_back(conv_case("conv2d 3x3 zero pad", ConvOptions::same(3), 3, 6, 8));
  cases.push_back(conv_case("conv2d 3x3 theta wrap", ConvOptions::same(3, 1, 1, true), 3, 6, 8));
  cases.push_back(conv_case("conv2d 4x4 stride 2", {2, 1, 1, 1, PadMode::zero, PadMode::wrap}, 4, 8, 8));
  cases.push_back(conv_case("conv2d 3x3 dilation 2", ConvOptions::same(3, 1, 2, true), 3, 7, 9));
  for (bool wrap : {false, true}) {
    cases.push_back(unary_case(wrap ? "upsample2x wrap" : "upsample2x", Shape::nchw(2, 2, 3, 4),
                               [wrap](Graph<double>& g, Var x) { return upsample2x(g, x, wrap); }));
  }
  cases.push_back(unary_case("avg_pool2x", Shape::nchw(2, 3, 4, 6), [](auto& g, Var x) { return avg_pool2x(g, x); }));
  cases.push_back(unary_case("mean_over_width", Shape::nchw(2, 3, 4, 6),
                             [](auto& g, Var x) { return mean_over_width(g, x); }));
  cases.push_back(unary_case("global_avg_pool", Shape::nchw(2, 3, 4, 6),
                             [](auto& g, Var x) { return global_avg_pool(g, x); }));
  const std::pair<Activation, const char*> acts[] = {
      {Activation::leaky_relu, "leaky relu"}, {Activation::relu, "relu"}, {Activation::tanh, "tanh"}};
  for (auto [kind, label] : acts) {
    cases.push_back(unary_case(label, Shape::vector(64), [kind](auto& g, Var x) { return activation(g, kind, x); }));
  }
  cases.push_back({"linear", 1e-5, [] {
                     ParamStore<double> s;
                     const auto ix = add_random(s, "x", Shape::nchw(3, 2, 2, 2), 17);
                     const auto iw = add_random(s, "w", Shape::matrix(5, 8), 18);
                     const auto ib = add_random(s, "b", Shape::vector(5), 19);
                     return grad_check(
                         [&](Graph<double>& g) {
                           return project(g, linear(g, g.parameter(s.at(ix)), g.parameter(s.at(iw)),
                                                    g.parameter(s.at(ib))), 20);
                         },
                         s, kOpOptions);
                   }});
  cases.push_back({"instance_norm (variance path)", 1e-4, [] {
                     ParamStore<double> s;
                     const auto ix = add_random(s, "x", Shape::nchw(2, 3, 3, 4), 21);
                     const auto ig = add_random(s, "gain", Shape::vector(3), 22, 0.5, 1.5);
                     const auto is = add_random(s, "shift", Shape::vector(3), 23);
                     return grad_check(
                         [&](Graph<double>& g) {
                           return project(g, instance_norm(g, g.parameter(s.at(ix)), g.parameter(s.at(ig)),
                                                           g.parameter(s.at(is))), 24);
                         },
                         s, kOpOptions);
                   }});
  cases.push_back({"add sub mul scale add_scalar concat", 1e-5, [] {
                     ParamStore<double> s;
                     const auto ia = add_random(s, "a", Shape::nchw(2, 2, 3, 3), 28);
                     const auto ib = add_random(s, "b", Shape::nchw(2, 2, 3, 3), 29);
                     const auto ic = add_random(s, "c", Shape::nchw(2, 1, 3, 3), 30);
                     return grad_check(
                         [&](Graph<double>& g) {
                           const Var a = g.parameter(s.at(ia));
                           const Var b = g.parameter(s.at(ib));
                           const Var x = add_scalar(g, scale(g, sub(g, mul(g, a, b), add(g, a, b)), 0.7), 0.3);
                           const Var parts[] = {x, g.parameter(s.at(ic)), a};
                           return project(g, concat_channels<double>(g, parts), 31);
                         },
                         s, kOpOptions);
                   }});
  cases.push_back({"select", 1e-5, [] {
                     ParamStore<double> s;
                     const auto ia = add_random(s, "a", Shape::nchw(1, 2, 3, 3), 32);
                     const auto ib = add_random(s, "b", Shape::nchw(1, 2, 3, 3), 33);
                     return grad_check(
                         [&](Graph<double>& g) {
                           const Var m = binary_mask(g, Shape::nchw(1, 1, 3, 3), 34);
                           return project(g, select(g, m, g.parameter(s.at(ia)), g.parameter(s.at(ib))), 35);
                         },
                         s, kOpOptions);
                   }});
  cases.push_back({"sum mean masked_mse l1_mean weighted_sum", 1e-5, [] {
                     ParamStore<double> s;
                     const auto ip = add_random(s, "p", Shape::nchw(2, 3, 4, 4), 36);
                     const auto it = add_random(s, "t", Shape::nchw(2, 3, 4, 4), 37);
                     return grad_check(
                         [&](Graph<double>& g) {
                           const Var p = g.parameter(s.at(ip));
                           const Var t = g.parameter(s.at(it));
                           const Var w = binary_mask(g, Shape::nchw(2, 1, 4, 4), 38);
                           const Var terms[] = {masked_mse(g, p, t, w), l1_mean(g, p, t), mean(g, p),
                                                scale(g, sum(g, t), 0.01)};
                           const double weights[] = {1.0, 0.5, 0.25, 1.0};
                           return weighted_sum<double>(g, terms, weights);
                         },
                         s, kOpOptions);
                   }});
  cases.push_back({"pyramid reconstruction loss", 1e-5, [] {
                     ParamStore<double> s;
                     const auto ip = add_random(s, "p", Shape::nchw(2, 3, 8, 8), 39);
                     return grad_check(
                         [&](Graph<double>& g) {
                           return nn::pyramid_recon_loss(g, g.parameter(s.at(ip)),
                                                         random_input(g, Shape::nchw(2, 3, 8, 8), 40),
                                                         binary_mask(g, Shape::nchw(2, 1, 8, 8), 41),
                                                         nn::kStage2LevelWeights);
                         },
                         s, kOpOptions);
                   }});
  cases.push_back({"distortion loss", 1e-5, [] {
                     ParamStore<double> s;
                     const auto ip = add_random(s, "p", Shape::nchw(1, 20, 1, 1), 42, 0.5, 1.5);
                     return grad_check(
                         [&](Graph<double>& g) {
                           return nn::distortion_loss(g, g.parameter(s.at(ip)),
                                                      random_input(g, Shape::nchw(1, 20, 1, 1), 43, 0.5, 1.5));
                         },
                         s, {.step = 1e-7});
                   }});

  cases.push_back({"generator (polar, wrap on)", 1e-5, [] {
                     nn::Generator net({.base_channels = 2}, 31);
                     ParamStore<double> p = net.params().cast<double>();
                     return grad_check(
                         [&](Graph<double>& g) {
                           return project(g, net.forward(g, p, random_input(g, Shape::nchw(1, 3, 8, 16), 1),
                                                         binary_mask(g, Shape::nchw(1, 1, 8, 16), 2)), 3);
                         },
                         p, kNetOptions);
                   }});
  cases.push_back({"generator (Cartesian, wrap off)", 1e-5, [] {
                     nn::Generator net({.base_channels = 2, .wrap_theta = false}, 35);
                     ParamStore<double> p = net.params().cast<double>();
                     return grad_check(
                         [&](Graph<double>& g) {
                           return project(g, net.forward(g, p, random_input(g, Shape::nchw(1, 3, 12, 12), 4),
                                                         binary_mask(g, Shape::nchw(1, 1, 12, 12), 5)), 6);
                         },
                         p, kNetOptions);
                   }});
  cases.push_back({"perception", 1e-5, [] {
                     nn::Perception net({.base_channels = 2, .hidden = 6, .n_rho = 16}, 32);
                     ParamStore<double> p = net.params().cast<double>();
                     // Off the zero-initialized head so upstream layers receive gradient.
                     p.at("fc2.w").data = random_values(p.at("fc2.w").numel(), 4, -0.3, 0.3);
                     return grad_check(
                         [&](Graph<double>& g) {
                           return project(g, net.forward(g, p, random_input(g, Shape::nchw(2, 3, 16, 32), 5)), 6);
                         },
                         p, kNetOptions);
                   }});
  cases.push_back({"revision (instance norm)", 1e-4, [] {
                     nn::Revision net({.base_channels = 2, .residual_blocks = 2}, 33);
                     ParamStore<double> p = net.params().cast<double>();
                     for (std::size_t i = 0; i < p.size(); ++i) {
                       if (p.name(i).ends_with(".gain")) p.at(i).data = random_values(p.at(i).numel(), 40 + i, 0.5, 1.5);
                     }
                     return grad_check(
                         [&](Graph<double>& g) {
                           return project(g, net.forward(g, p, random_input(g, Shape::nchw(1, 3, 8, 8), 7),
                                                         random_input(g, Shape::nchw(1, 1, 8, 8), 8)), 9);
                         },
                         p, kNetOptions);
                   }});
  cases.push_back({"critic + WGAN losses", 1e-5, [] {
                     nn::Critic critic({.base_channels = 2, .in_channels = 4}, 34);
                     ParamStore<double> p = critic.params().cast<double>();
                     return grad_check(
                         [&](Graph<double>& g) {
                           const auto l = nn::wgan_losses(g, p, critic, random_input(g, Shape::nchw(2, 3, 16, 16), 11),
                                                          random_input(g, Shape::nchw(2, 3, 16, 16), 12),
                                                          binary_mask(g, Shape::nchw(2, 1, 16, 16), 10));
                           const Var both[] = {l.critic, l.gen};
                           const double w[] = {1.0, 0.5};
                           return weighted_sum<double>(g, both, w);
                         },
                         p, kNetOptions);
                   }});
  return cases;
}

Outcome gradient_criterion() {
  bool pass = true;
  std::string failures;
  double worst = 0.0;
  std::size_t checked = 0, excluded = 0;
  const auto cases = grad_cases();
  for (const auto& c : cases) {
    const GradCheckReport r = c.run();
    checked += r.checked;
    excluded += r.excluded;
    worst = std::max(worst, r.max_rel_error);
    if (r.max_rel_error > c.tol || r.checked == 0) {
      pass = false;
      failures += fmt::format("; {} {:.2e} > {:.0e} ({})", c.name, r.max_rel_error, c.tol, r.worst);
    }
  }
  return {pass, fmt::format("{} cases, {} coordinates ({} kink-adjacent excluded), max relative error {:.2e}{}",
                            cases.size(), checked, excluded, worst, failures)};
}

// 6. Perception alone on 200 procedural 128x128 samples.
Outcome perception_criterion() {
  DatasetSpec spec;
  spec.n = 200;
  spec.seed = 6;
  const fs::path dir = fresh_dir("c6_perception");
  const Manifest m = build_dataset(spec, dir / "data");
  TrainConfig cfg;
  cfg.iters = 2000;
  cfg.seed = 6;
  cfg.adversarial = false;
  cfg.train_outpaint = false;
  TrainResult r = train_stage1(m, cfg, dir / "model");
  const double trained = perception_error(r.model, m, "test");
  // Reference: an untrained network predicts exactly 1 (the identity distortion).
  Model identity = r.model;
  identity.perception.emplace(r.model.perception->config(), 0);
  const double baseline = perception_error(identity, m, "test");
  return {trained <= 0.05,
          fmt::format("held-out vector_l1 {:.4f} after {} iterations (tol 0.05); identity predictor {:.4f}", trained,
                      cfg.iters, baseline)};
}

// 7. Polar vs Cartesian training curves over three seeds.
Outcome compare_criterion() {
  DatasetSpec spec;
  spec.n = 200;
  spec.seed = 7;
  spec.height = spec.width = 64;
  spec.grid_n_rho = 32;
  spec.grid_n_theta = 128;
  const fs::path dir = fresh_dir("c7_compare");
  const Manifest m = build_dataset(spec, dir / "data");
  int polar_wins = 0;
  bool formats_ok = true;
  std::string seeds;
  for (std::uint64_t seed : {1, 2, 3}) {
    CompareConfig cfg;
    cfg.seed = seed;
    const fs::path out = dir / fmt::format("seed{}", seed);
    const CompareResult r = compare_domains(m, cfg, out);
    polar_wins += r.polar_wins() ? 1 : 0;
    seeds += fmt::format("{}seed {}: polar {:.5f} cartesian {:.5f}", seeds.empty() ? "" : "; ", seed, r.polar_final,
                         r.cartesian_final);
    for (const char* name : {"polar_loss.txt", "cartesian_loss.txt"}) {
      const auto bytes = read_bytes(out / name);
      const auto rows = parse_loss_log({bytes.begin(), bytes.end()});
      formats_ok = formats_ok && rows.size() == static_cast<std::size_t>(cfg.iters) && rows.back().iter == cfg.iters;
    }
    const auto svg = read_bytes(out / "compare.svg");
    const std::string svg_text(svg.begin(), svg.end());
    std::size_t lines = 0;
    for (std::size_t p = svg_text.find("<polyline"); p != std::string::npos; p = svg_text.find("<polyline", p + 1)) {
      ++lines;
    }
    const auto verdict = read_bytes(out / "verdict.txt");
    formats_ok = formats_ok && lines >= 2 && svg_text.starts_with("<svg") &&
                 std::string(verdict.begin(), verdict.end()).find("polar_le_cartesian=") != std::string::npos;
  }
  const bool property = polar_wins >= 2;
  const std::string outcome =
      property ? fmt::format("property holds: polar <= Cartesian in {} of 3 seeds", polar_wins)
               : fmt::format("NEGATIVE RESULT: polar <= Cartesian in only {} of 3 seeds", polar_wins);
  return {formats_ok, fmt::format("curves and verdicts {}; {} ({})", formats_ok ? "well-formed" : "MALFORMED", outcome,
                                  seeds)};
}

// 8. Two identical CLI invocations give identical output trees.
std::map<std::string, std::vector<std::uint8_t>> tree(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_bytes(e.path());
  }
  return files;
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome determinism_criterion() {
  const fs::path dir = fresh_dir("c8_determinism");
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::vector<std::string> diffs;
  auto twice = [&](const std::string& label, const std::function<std::vector<std::string>(const std::string&)>& args) {
    for (const char* run : {"a", "b"}) {
      if (cli(args(p(label + "_" + run))) != 0) fail(ErrorCode::io_failure, label + " invocation failed");
    }
    if (tree(p(label + "_a")) != tree(p(label + "_b"))) diffs.push_back(label);
  };
  twice("synth", [](const std::string& out) {
    return std::vector<std::string>{"synth", "--procedural", "--n", "6", "--seed", "8", "--size", "64", "--threads",
                                    "1", "--out", out};
  });
  const std::string data = p("synth_a");
  twice("train1", [&](const std::string& out) {
    return std::vector<std::string>{"train", "--in", data, "--stage", "1", "--iters", "30", "--batch", "2",
                                    "--base-channels", "4", "--adversarial", "off", "--seed", "8", "--threads",
                                    "1", "--out", out};
  });
  twice("train2", [&](const std::string& out) {
    return std::vector<std::string>{"train", "--in", data, "--stage", "2", "--ckpt", p("train1_a"), "--iters",
                                    "10", "--batch", "2", "--base-channels", "4", "--adversarial", "off",
                                    "--seed", "8", "--threads", "1", "--out", out};
  });
  twice("infer", [&](const std::string& out) {
    return std::vector<std::string>{"outpaint", "--in", data, "--ckpt", p("train2_a"), "--threads", "1", "--out",
                                    out};
  });
  std::string joined;
  for (const auto& d : diffs) joined += " " + d;
  return {diffs.empty(), diffs.empty() ? "synth, stage-1 train, stage-2 train and outpaint trees bitwise identical"
                                       : "differences in" + joined};
}

// 9. Valid pixels survive inference untouched; every mask pixel is filled in range.
Outcome contract_criterion() {
  const fs::path dir = g_work / "c8_determinism";
  if (!fs::exists(dir / "train2_a")) return {false, "needs the model trained for criterion 8"};
  const Manifest m = read_manifest(dir / "synth_a");
  Model model = load_model(dir / "train2_a");
  std::size_t valid = 0, filled = 0, bad = 0;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const SampleData d = load_sample(m, i, kFisheye | kMask);
    const InferResult r = infer(model, d.fisheye, m.r_valid);
    for (int y = 0; y < d.fisheye.height(); ++y) {
      for (int x = 0; x < d.fisheye.width(); ++x) {
        const bool fill = d.mask.at(y, x) != 0.0f;
        if (fill != (r.mask.at(y, x) != 0.0f)) ++bad;
        for (int c = 0; c < 3; ++c) {
          const float out = r.image.at(y, x, c);
          if (fill) {
            if (!(out >= 0.0f && out <= 1.0f)) ++bad;
          } else if (std::bit_cast<std::uint32_t>(out) != std::bit_cast<std::uint32_t>(d.fisheye.at(y, x, c))) {
            ++bad;
          }
        }
        ++(fill ? filled : valid);
      }
    }
  }
  return {bad == 0 && filled > 0,
          fmt::format("{} samples: {} valid pixels bit-exact, {} fill pixels in [0, 1], {} violations",
                      m.samples.size(), valid, filled, bad)};
}

// 10. RTF1 and CKP1 on randomized payloads, compared bit for bit.
float random_float(std::mt19937_64& gen) {
  static constexpr float kSpecial[] = {0.0f, -0.0f, INFINITY, -INFINITY, 1e-45f, -3.4e38f, 1.0f};
  switch (gen() % 4) {
    case 0:
      return kSpecial[gen() % std::size(kSpecial)];
    case 1: {
      // Any non-NaN bit pattern.
      float f;
      do f = std::bit_cast<float>(static_cast<std::uint32_t>(gen())); while (std::isnan(f));
      return f;
    }
    default:
      return std::uniform_real_distribution<float>(-2.0f, 2.0f)(gen);
  }
}

bool same_bits(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

Outcome format_criterion() {
  std::mt19937_64 gen(10);
  const fs::path dir = fresh_dir("c10_formats");
  int rtf_ok = 0, ckp_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    TensorFile t;
    t.dims.resize(1 + gen() % 4);
    for (auto& d : t.dims) d = 1 + gen() % 6;
    std::size_t n = 1;
    for (auto d : t.dims) n *= d;
    t.data.resize(n);
    for (float& v : t.data) v = random_float(gen);
    const auto bytes = encode_tensor_file(t);
    const TensorFile back = decode_tensor_file(bytes);
    bool ok = back.dims == t.dims && same_bits(back.data, t.data) && encode_tensor_file(back) == bytes;
    if (trial % 100 == 0) {
      write_tensor_file(dir / "t.rtf", t);
      const TensorFile disk = read_tensor_file(dir / "t.rtf");
      ok = ok && disk.dims == t.dims && same_bits(disk.data, t.data);
    }
    rtf_ok += ok;

    ParamStore<float> store;
    const int tensors = 1 + static_cast<int>(gen() % 4);
    for (int k = 0; k < tensors; ++k) {
      const Shape s = Shape::nchw(1 + gen() % 3, 1 + gen() % 3, 1 + gen() % 3, 1 + gen() % 3);
      const auto i = store.add(fmt::format("layer{}.t{}", k, gen() % 1000), s);
      for (float& v : store.at(i).data) v = random_float(gen);
    }
    const auto ckp = encode_checkpoint(store);
    const ParamStore<float> loaded = decode_checkpoint(ckp);
    ok = loaded.size() == store.size() && encode_checkpoint(loaded) == ckp;
    for (std::size_t i = 0; ok && i < store.size(); ++i) {
      ok = loaded.name(i) == store.name(i) && loaded.at(i).shape.dims == store.at(i).shape.dims &&
           same_bits(loaded.at(i).data, store.at(i).data);
    }
    ckp_ok += ok;
  }
  return {rtf_ok == 1000 && ckp_ok == 1000,
          fmt::format("RTF1 {}/1000 and CKP1 {}/1000 randomized payloads bit-exact", rtf_ok, ckp_ok)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fisheyex acceptance criteria"};
  std::string work = (fs::temp_directory_path() / "fisheyex_acceptance").string();
  std::vector<int> only;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--work-dir", work, "Scratch directory for datasets and models");
  app.add_option("--only", only, "Run only these criteria (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  g_work = work;
  fs::create_directories(g_work);
  set_thread_count(threads);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"fov gain of 512x512 samples", fov_gain_criterion},
      {"strict radial symmetry of level maps", symmetry_criterion},
      {"warp vs brute-force oracle", warp_criterion},
      {"polar round trip on smooth noise", polar_criterion},
      {"finite-difference gradient checks", gradient_criterion},
      {"toy perception training", perception_criterion},
      {"polar vs Cartesian convergence", compare_criterion},
      {"bitwise determinism of CLI runs", determinism_criterion},
      {"inference contract", contract_criterion},
      {"RTF1/CKP1 round trips", format_criterion},
  };
  const std::set<int> selected(only.begin(), only.end());
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::cout << fmt::format("{} [{:2}] {}: {} ({:.1f} s)", o.pass ? "PASS" : "FAIL", number, criteria[i].first,
                             o.detail, seconds)
              << std::endl;
  }
  std::cout << (all ? "acceptance: all selected criteria passed" : "acceptance: FAILED") << std::endl;
  return all ? 0 : 1;
}
