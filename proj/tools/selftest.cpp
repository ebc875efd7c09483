#include <cmath>
#include <functional>
#include <ostream>
#include <random>

#include <fmt/core.h>

#include "cli.hpp"
#include "fisheyex/ad/adam.hpp"
#include "fisheyex/ad/checkpoint.hpp"
#include "fisheyex/ad/grad_check.hpp"
#include "fisheyex/ad/ops.hpp"
#include "fisheyex/distortion.hpp"
#include "fisheyex/image_io.hpp"
#include "fisheyex/metrics.hpp"
#include "fisheyex/polar.hpp"
#include "oracles.hpp"

namespace fisheyex::cli {

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::array<double, 4> random_valid_k(std::mt19937_64& gen, double r_max) {
  return sample_profile(gen(), ParamRanges{}, {0.0, 0.0}, r_max).profile.k;
}

Outcome level_oracle() {
  std::mt19937_64 gen(1);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    DistortionProfile p;
    p.k = random_valid_k(gen, 64.0);
    p.r_valid = 64.0;
    for (double r : {0.0, 10.0, 33.3, 64.0}) {
      const double a = distortion_level(p, r);
      const double b = oracle::level_power_sum(p.k, r);
      worst = std::max(worst, std::abs(a - b) / std::abs(b));
    }
  }
  return {worst <= 1e-12, fmt::format("max relative error {:.2e}", worst)};
}

Outcome warp_oracle() {
  std::mt19937_64 gen(2);
  const ImageBuffer board = oracle::checkerboard(32, 32, 4);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    DistortionProfile p;
    p.k = random_valid_k(gen, 16.0);
    p.center_x = p.center_y = 15.5;
    p.r_valid = 16.0;
    const WarpResult w = synthesize_fisheye(board, p, 32, 32);
    const auto ref = oracle::fisheye_warp(board, p.k, 15.5, 15.5, 16.0, 32, 32);
    for (std::size_t j = 0; j < ref.size(); ++j) worst = std::max(worst, std::abs(ref[j] - w.image.data()[j]));
  }
  return {worst <= 1e-5, fmt::format("max abs diff {:.2e}", worst)};
}

Outcome polar_round_trip() {
  const ImageBuffer img = oracle::gaussian_blur(oracle::random_image(64, 64, 3, 3), 2.0);
  const PolarGrid grid = default_grid(64, 64);
  const ImageBuffer back = to_cartesian(to_polar(img, grid), grid, 64, 64);
  const Mask inside = circle_mask(64, 64, grid.center_x, grid.center_y, 32.0).complement();
  const double db = masked_psnr(back, img, inside);
  return {db >= 30.0, fmt::format("{:.2f} dB inside the inscribed circle", db)};
}

Outcome level_map_symmetry() {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<float> u(0.5f, 1.5f);
  double total = 0.0;
  for (auto [h, w] : {std::pair{32, 32}, std::pair{33, 47}, std::pair{64, 40}}) {
    DistortionLevelVector v{std::vector<float>(24), 20.0};
    for (float& x : v.values) x = u(gen);
    const std::pair<double, double> c{(w - 1) / 2.0, (h - 1) / 2.0};
    const auto s = symmetry_metrics(expand_level_map(v, h, w, c), c);
    total += s.m_hs + s.m_vs + s.m_cs;
  }
  return {total == 0.0, fmt::format("sum of symmetry metrics {}", total)};
}

Outcome format_round_trips() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<float> u(-1e6f, 1e6f);
  for (int trial = 0; trial < 100; ++trial) {
    TensorFile t;
    t.dims = {static_cast<std::uint32_t>(1 + gen() % 5), static_cast<std::uint32_t>(1 + gen() % 7)};
    t.data.resize(t.dims[0] * t.dims[1]);
    for (float& v : t.data) v = u(gen);
    if (!(decode_tensor_file(encode_tensor_file(t)) == t)) return {false, "RTF1 mismatch"};
    ad::ParamStore<float> store;
    const auto i = store.add(fmt::format("p{}", trial), ad::Shape::nchw(2, 1, 1, static_cast<int>(1 + gen() % 9)));
    for (float& v : store.at(i).data) v = u(gen);
    if (ad::encode_checkpoint(ad::decode_checkpoint(ad::encode_checkpoint(store))) != ad::encode_checkpoint(store)) {
      return {false, "CKP1 mismatch"};
    }
  }
  return {true, "100 randomized payloads bit-exact"};
}

Outcome gradient_check() {
  using namespace ad;
  ParamStore<double> store;
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  auto add = [&](const char* name, Shape s) {
    const auto i = store.add(name, s);
    for (double& v : store.at(i).data) v = u(gen);
    return i;
  };
  const auto ix = add("x", Shape::nchw(1, 2, 6, 8));
  const auto iw = add("w", Shape::nchw(3, 2, 3, 3));
  const auto ib = add("b", Shape::vector(3));
  const auto report = grad_check(
      [&](Graph<double>& g) {
        const Var y = conv2d(g, g.parameter(store.at(ix)), g.parameter(store.at(iw)), g.parameter(store.at(ib)),
                             ConvOptions::same(3, 1, 1, true));
        return mean(g, activation(g, Activation::tanh, upsample2x(g, y, true)));
      },
      store, GradCheckOptions{.step = 1e-6});
  return {report.max_rel_error <= 1e-5, fmt::format("max relative error {:.2e} over {} coordinates",
                                                    report.max_rel_error, report.checked)};
}

Outcome adam_reference() {
  ad::ParamStore<float> store;
  const auto i = store.add("w", ad::Shape::scalar());
  store.at(i).data = {1.0f};
  auto state = ad::make_adam(store, 1e-3, 0.5, 0.9);
  oracle::AdamReference ref{1e-3, 0.5, 0.9, 1e-8};
  double w = 1.0, worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double g = 2.0 * store.at(i).data[0];
    store.at(i).grad = {static_cast<float>(g)};
    ad::adam_step(store, state);
    w = ref.step(w, 2.0 * w);
    worst = std::max(worst, std::abs(w - store.at(i).data[0]));
  }
  return {worst <= 1e-6, fmt::format("max deviation {:.2e} over 20 steps", worst)};
}

Outcome ssim_oracle() {
  const ImageBuffer a = oracle::random_image(24, 24, 1, 7);
  const ImageBuffer b = oracle::gaussian_blur(a, 1.0);
  const std::vector<double> va(a.data().begin(), a.data().end()), vb(b.data().begin(), b.data().end());
  const double direct = oracle::ssim_direct(va, vb, 24, 24, 1.0);
  const double lib = ssim(a, b);
  return {std::abs(direct - lib) <= 1e-6, fmt::format("library {:.6f} direct {:.6f}", lib, direct)};
}

Outcome fov_gain_square() {
  const Mask m = circle_mask(256, 256, 127.5, 127.5, 128.0);
  const double gain = fov_gain(m);
  return {std::abs(gain - (4.0 - M_PI) / M_PI) <= 0.005, fmt::format("{:.4f}", gain)};
}

}  // namespace

bool selftest(std::ostream& out) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"distortion level vs power-sum oracle", level_oracle},
      {"fisheye warp vs brute-force oracle", warp_oracle},
      {"polar round trip", polar_round_trip},
      {"level map radial symmetry", level_map_symmetry},
      {"RTF1/CKP1 round trips", format_round_trips},
      {"finite-difference gradient check", gradient_check},
      {"Adam vs textbook update", adam_reference},
      {"SSIM vs direct window sum", ssim_oracle},
      {"FoV gain of an inscribed circle", fov_gain_square},
  };
  bool all = true;
  for (const auto& [name, fn] : checks) {
    Outcome o{false, ""};
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, e.what()};
    }
    all = all && o.pass;
    out << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << "\n";
  }
  out << (all ? "selftest passed\n" : "selftest FAILED\n");
  return all;
}

}  // namespace fisheyex::cli
