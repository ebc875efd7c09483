#include "fisheyex/pipeline/compare.hpp"

#include <cmath>

#include <fmt/core.h>

#include "fisheyex/ad/adam.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"
#include "fisheyex/log.hpp"
#include "fisheyex/parallel.hpp"
#include "fisheyex/pipeline/plot.hpp"
#include "batch.hpp"

namespace fs = std::filesystem;

namespace fisheyex::pipeline {

using detail::Planar;

namespace {

struct DomainData {
  std::vector<Planar> inputs, masks, weights, targets;
};

std::vector<LossRow> run_domain(const DomainData& data, bool wrap, const CompareConfig& cfg, const char* name) {
  nn::Generator gen(nn::GeneratorConfig{.base_channels = cfg.base_channels, .wrap_theta = wrap},
                    mix_seed(cfg.seed, 11));
  auto adam = ad::make_adam(gen.params(), cfg.lr, 0.5, 0.9);
  Rng rng(mix_seed(cfg.seed, 14));
  std::vector<LossRow> log;
  for (int it = 1; it <= cfg.iters; ++it) {
    const auto pick = detail::draw_batch(rng, data.inputs.size(), cfg.batch);
    ad::Graph<float> g;
    const ad::Var out = gen.forward(g, gen.params(), g.constant(detail::stack(data.inputs, pick)),
                                    g.constant(detail::stack(data.masks, pick)));
    const ad::Var loss = nn::pyramid_recon_loss(g, out, g.constant(detail::stack(data.targets, pick)),
                                                g.constant(detail::stack(data.weights, pick)));
    const double v = g.item(loss);
    if (!std::isfinite(v)) fail(ErrorCode::non_finite, fmt::format("{} run, iteration {}: non-finite loss", name, it));
    g.backward(loss);
    ad::adam_step(gen.params(), adam);
    log.push_back(LossRow{it, v, 0.0, 0.0});
    log::debug("compare {} iter {} loss_pr {:.6f}", name, it, v);
  }
  return log;
}

std::string rows_text(const std::vector<LossRow>& rows) {
  std::string out;
  for (const LossRow& r : rows) out += format_loss_row(r) + "\n";
  return out;
}

std::vector<double> pr_values(const std::vector<LossRow>& rows) {
  std::vector<double> v;
  for (const LossRow& r : rows) v.push_back(r.pr);
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace

void CompareConfig::validate() const {
  if (iters < 1 || batch < 1 || base_channels < 1 || smooth_window < 1) {
    fail(ErrorCode::invalid_argument, "iterations, batch, channels and smoothing window must be >= 1");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::invalid_argument, "learning rate must be positive");
}

std::string CompareResult::verdict() const {
  return fmt::format(
      "polar_final={}\ncartesian_final={}\npolar_le_cartesian={}\n"
      "{}\n",
      polar_final, cartesian_final, polar_wins() ? 1 : 0,
      polar_wins() ? "polar reconstruction loss ended at or below the Cartesian one"
                   : "NEGATIVE RESULT: Cartesian reconstruction loss ended below the polar one");
}

CompareResult compare_domains(const Manifest& manifest, const CompareConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const PolarGrid& grid = manifest.grid;
  if (grid.n_rho % 4 != 0 || grid.n_theta % 4 != 0 || manifest.height % 4 != 0 || manifest.width % 4 != 0) {
    fail(ErrorCode::config_mismatch, "compare needs grid and frame sides divisible by 4");
  }
  const auto train = manifest.indices("train");
  if (train.empty()) fail(ErrorCode::missing_data, "manifest has no training samples");

  DomainData polar, cart;
  for (DomainData* d : {&polar, &cart}) {
    d->inputs.resize(train.size());
    d->masks.resize(train.size());
    d->weights.resize(train.size());
    d->targets.resize(train.size());
  }
  parallel_for(train.size(), [&](std::size_t k) {
    const SampleData s = load_sample(manifest, train[k]);
    polar.inputs[k] = detail::to_planar(s.polar_fisheye, true);
    polar.masks[k] = detail::to_planar(s.fill_band);
    polar.weights[k] = detail::weight_planar(s.fill_band, s.validity);
    polar.targets[k] = detail::to_planar(s.polar_gt, true);
    cart.inputs[k] = detail::to_planar(s.fisheye, true);
    cart.masks[k] = detail::to_planar(s.mask);
    cart.weights[k] = cart.masks[k];
    cart.targets[k] = detail::to_planar(s.gt, true);
  });

  CompareResult res;
  res.polar = run_domain(polar, true, cfg, "polar");
  res.cartesian = run_domain(cart, false, cfg, "cartesian");
  const std::vector<double> sp = smooth(pr_values(res.polar), cfg.smooth_window);
  const std::vector<double> sc = smooth(pr_values(res.cartesian), cfg.smooth_window);
  res.polar_final = sp.back();
  res.cartesian_final = sc.back();

  fs::create_directories(out_dir);
  write_text(out_dir / "polar_loss.txt", rows_text(res.polar));
  write_text(out_dir / "cartesian_loss.txt", rows_text(res.cartesian));
  write_text(out_dir / "compare.svg",
             svg_line_chart(fmt::format("reconstruction loss, smoothed over {} iterations", cfg.smooth_window),
                            {{"polar", sp}, {"cartesian", sc}}));
  write_text(out_dir / "verdict.txt", res.verdict());
  log::info("compare: polar {:.6f} cartesian {:.6f}", res.polar_final, res.cartesian_final);
  return res;
}

}  // namespace fisheyex::pipeline
