#include "fisheyex/pipeline/train.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "fisheyex/ad/adam.hpp"
#include "fisheyex/ad/checkpoint.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"
#include "fisheyex/log.hpp"
#include "fisheyex/metrics.hpp"
#include "fisheyex/parallel.hpp"
#include "fisheyex/pipeline/infer.hpp"
#include "fisheyex/pipeline/plot.hpp"
#include "batch.hpp"

namespace fs = std::filesystem;

namespace fisheyex::pipeline {

using detail::Planar;

namespace {

// Seed streams derived from the master seed.
constexpr std::uint64_t kGeneratorStream = 11;
constexpr std::uint64_t kPerceptionStream = 12;
constexpr std::uint64_t kCriticStream = 13;
constexpr std::uint64_t kBatchStream = 14;
constexpr std::uint64_t kRevisionStream = 15;

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_log(const fs::path& dir, const std::vector<LossRow>& log, const std::string& title) {
  std::string text;
  std::vector<double> pr, ad, sd;
  for (const LossRow& row : log) {
    text += format_loss_row(row) + "\n";
    pr.push_back(row.pr);
    ad.push_back(row.ad);
    sd.push_back(row.sd);
  }
  write_text(dir / "loss_log.txt", text);
  std::vector<Series> series{{"loss_pr", pr}};
  if (std::any_of(sd.begin(), sd.end(), [](double v) { return v != 0.0; })) series.push_back({"loss_sd", sd});
  write_text(dir / "loss_curve.svg", svg_line_chart(title, series));
  (void)ad;
}

void check_finite(const LossRow& row, double total) {
  if (!std::isfinite(total)) {
    fail(ErrorCode::non_finite, fmt::format("iteration {}: non-finite loss (loss_pr={} loss_ad={} loss_sd={})", row.iter,
                                            row.pr, row.ad, row.sd));
  }
}

std::vector<std::size_t> train_indices(const Manifest& m) {
  auto idx = m.indices("train");
  if (idx.empty()) fail(ErrorCode::missing_data, "manifest has no training samples");
  return idx;
}

// Critic updates against a fixed fake batch, then clipping.
void critic_updates(nn::Critic& critic, ad::AdamState<float>& adam, const ad::Tensor<float>& real,
                    const ad::Tensor<float>& fake, const ad::Tensor<float>& mask, const TrainConfig& cfg) {
  for (int k = 0; k < cfg.n_critic; ++k) {
    ad::Graph<float> g;
    const nn::WganLosses l =
        nn::wgan_losses(g, critic.params(), critic, g.constant(real), g.constant(fake), g.constant(mask));
    g.backward(l.critic);
    ad::adam_step(critic.params(), adam);
    ad::clip_weights(critic.params(), cfg.clip);
  }
}

ad::Tensor<float> values_of(const ad::Graph<float>& g, ad::Var v) {
  return ad::Tensor<float>(g.shape(v), std::vector<float>(g.value(v).begin(), g.value(v).end()));
}

}  // namespace

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) fail(ErrorCode::invalid_argument, "stage must be 1 or 2");
  if (iters < 1) fail(ErrorCode::invalid_argument, "iterations must be >= 1");
  if (batch < 1) fail(ErrorCode::invalid_argument, "batch must be >= 1");
  if (lr < 0.0 || !std::isfinite(lr)) fail(ErrorCode::invalid_argument, "learning rate must be positive (0 = default)");
  if (!std::isfinite(weights.adversarial) || !std::isfinite(weights.distortion) || weights.adversarial < 0 ||
      weights.distortion < 0) {
    fail(ErrorCode::invalid_argument, "loss weights must be finite and non-negative");
  }
  if (!train_outpaint && !train_perception) fail(ErrorCode::invalid_argument, "nothing to train");
  if (base_channels < 1 || perception_hidden < 1 || critic_channels < 1 || revision_blocks < 0 || n_critic < 1 ||
      checkpoint_every < 0 || !(clip > 0.0)) {
    fail(ErrorCode::invalid_argument, "invalid network or critic settings");
  }
}

std::string format_loss_row(const LossRow& row) {
  return fmt::format("{} {} {} {}", row.iter, row.pr, row.ad, row.sd);
}

LossRow parse_loss_row(const std::string& line) {
  LossRow row;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  auto skip = [&] {
    while (p < end && *p == ' ') ++p;
  };
  auto parse = [&](auto& out) {
    skip();
    const auto r = std::from_chars(p, end, out);
    if (r.ec != std::errc()) fail(ErrorCode::unsupported_format, "malformed loss row: " + line);
    p = r.ptr;
  };
  parse(row.iter);
  parse(row.pr);
  parse(row.ad);
  parse(row.sd);
  skip();
  if (p != end) fail(ErrorCode::unsupported_format, "trailing text in loss row: " + line);
  return row;
}

std::vector<LossRow> parse_loss_log(const std::string& text) {
  std::vector<LossRow> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_loss_row(line));
  }
  return rows;
}

std::vector<double> smooth(const std::vector<double>& values, int window) {
  if (window < 1) fail(ErrorCode::invalid_argument, "smoothing window must be >= 1");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= static_cast<std::size_t>(window)) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, window));
  }
  return out;
}

TrainResult train_stage1(const Manifest& manifest, const TrainConfig& cfg, const fs::path& out_dir,
                         const IterationHook& hook) {
  cfg.validate();
  if (cfg.stage != 1) fail(ErrorCode::invalid_argument, "train_stage1 needs stage = 1");
  const PolarGrid& grid = manifest.grid;
  const bool outpaint = cfg.train_outpaint;
  const bool perceive = cfg.train_perception;
  const bool adversarial = outpaint && cfg.adversarial;
  if (outpaint && (grid.n_rho % 4 != 0 || grid.n_theta % 4 != 0)) {
    fail(ErrorCode::config_mismatch, "outpainting needs grid n_rho and n_theta divisible by 4");
  }

  TrainResult res;
  Model& model = res.model;
  model.height = manifest.height;
  model.width = manifest.width;
  model.r_valid = manifest.r_valid;
  model.grid = grid;
  if (outpaint) {
    model.generator.emplace(nn::GeneratorConfig{.base_channels = cfg.base_channels, .wrap_theta = true},
                            mix_seed(cfg.seed, kGeneratorStream));
  }
  if (perceive) {
    model.perception.emplace(nn::PerceptionConfig{.base_channels = cfg.base_channels,
                                                  .hidden = cfg.perception_hidden,
                                                  .n_rho = grid.n_rho,
                                                  .wrap_theta = true},
                             mix_seed(cfg.seed, kPerceptionStream));
  }
  std::optional<nn::Critic> critic;
  if (adversarial) {
    critic.emplace(nn::CriticConfig{.base_channels = cfg.critic_channels, .in_channels = 4, .wrap_theta = true,
                                    .clip = cfg.clip, .n_critic = cfg.n_critic},
                   mix_seed(cfg.seed, kCriticStream));
  }

  const auto train = train_indices(manifest);
  unsigned fields = kPolarFisheye;
  if (outpaint) fields |= kPolarGroundTruth | kFillBand | kValidity;
  if (perceive) fields |= kLevel;
  std::vector<Planar> inputs(train.size()), bands(train.size()), weights(train.size()), targets(train.size()),
      levels(train.size());
  parallel_for(train.size(), [&](std::size_t k) {
    const SampleData d = load_sample(manifest, train[k], fields);
    inputs[k] = detail::to_planar(d.polar_fisheye, true);
    if (outpaint) {
      bands[k] = detail::to_planar(d.fill_band);
      weights[k] = detail::weight_planar(d.fill_band, d.validity);
      targets[k] = detail::to_planar(d.polar_gt, true);
    }
    if (perceive) levels[k] = Planar{grid.n_rho, 1, 1, d.level.values};
  });

  const double lr = cfg.effective_lr();
  std::optional<ad::AdamState<float>> gen_adam, perc_adam, critic_adam;
  if (outpaint) gen_adam = ad::make_adam(model.generator->params(), lr, cfg.beta1, cfg.beta2);
  if (perceive) perc_adam = ad::make_adam(model.perception->params(), lr, cfg.beta1, cfg.beta2);
  if (adversarial) critic_adam = ad::make_adam(critic->params(), lr, cfg.beta1, cfg.beta2);

  Rng rng(mix_seed(cfg.seed, kBatchStream));
  for (int it = 1; it <= cfg.iters; ++it) {
    const auto pick = detail::draw_batch(rng, train.size(), cfg.batch);
    const ad::Tensor<float> x = detail::stack(inputs, pick);
    LossRow row{it};
    ad::Graph<float> g;
    const ad::Var xv = g.constant(x);
    std::vector<ad::Var> terms;
    std::vector<double> coefs;
    ad::Var l_pr, l_ad, l_sd;
    if (outpaint) {
      const ad::Tensor<float> band = detail::stack(bands, pick);
      const ad::Tensor<float> target = detail::stack(targets, pick);
      const ad::Var bv = g.constant(band);
      const ad::Var out = model.generator->forward(g, model.generator->params(), xv, bv);
      l_pr = nn::pyramid_recon_loss(g, out, g.constant(target), g.constant(detail::stack(weights, pick)));
      terms.push_back(l_pr);
      coefs.push_back(1.0);
      if (adversarial) {
        const ad::Var comp = ad::select(g, bv, out, xv);
        critic_updates(*critic, *critic_adam, target, values_of(g, comp), band, cfg);
        l_ad = ad::scale(g, ad::mean(g, critic->forward(g, critic->params(), comp, bv)), -1.0);
        terms.push_back(l_ad);
        coefs.push_back(cfg.weights.adversarial);
      }
    }
    if (perceive) {
      const ad::Var pred = model.perception->forward(g, model.perception->params(), xv);
      l_sd = nn::distortion_loss(g, pred, g.constant(detail::stack(levels, pick)));
      terms.push_back(l_sd);
      coefs.push_back(cfg.weights.distortion);
    }
    const ad::Var total = ad::weighted_sum<float>(g, terms, coefs);
    if (l_pr.valid()) row.pr = g.item(l_pr);
    if (l_ad.valid()) row.ad = g.item(l_ad);
    if (l_sd.valid()) row.sd = g.item(l_sd);
    check_finite(row, g.item(total));
    g.backward(total);
    if (outpaint) ad::adam_step(model.generator->params(), *gen_adam);
    if (perceive) ad::adam_step(model.perception->params(), *perc_adam);
    if (critic) critic->params().zero_grad();

    res.log.push_back(row);
    log::debug("stage1 iter {} loss_pr {:.6f} loss_ad {:.6f} loss_sd {:.6f}", it, row.pr, row.ad, row.sd);
    if (hook) hook(row, model);
    if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0 && it != cfg.iters) save_model(model, out_dir);
  }

  save_model(model, out_dir);
  if (critic) ad::write_checkpoint(out_dir / "critic_polar.ckp", critic->params());
  write_log(out_dir, res.log, "stage 1 training loss");
  log::info("stage 1: {} iterations, final loss_pr {:.6f} loss_sd {:.6f}", cfg.iters, res.log.back().pr,
            res.log.back().sd);
  return res;
}

TrainResult train_stage2(const Manifest& manifest, const fs::path& stage1_dir, const TrainConfig& cfg,
                         const fs::path& out_dir, const IterationHook& hook) {
  cfg.validate();
  if (cfg.stage != 2) fail(ErrorCode::invalid_argument, "train_stage2 needs stage = 2");
  TrainResult res;
  Model& model = res.model;
  model = load_model(stage1_dir);
  if (!model.generator || !model.perception) {
    fail(ErrorCode::config_mismatch, "stage 2 needs a stage-1 model with generator and perception networks");
  }
  if (model.revision) fail(ErrorCode::config_mismatch, "model in " + stage1_dir.string() + " is already a stage-2 model");
  if (!(model.grid == manifest.grid) || model.height != manifest.height || model.width != manifest.width) {
    fail(ErrorCode::config_mismatch, "stage-1 model was trained on a different frame or grid");
  }
  const int h = manifest.height, w = manifest.width;
  if (h % 4 != 0 || w % 4 != 0) fail(ErrorCode::config_mismatch, "revision needs image sides divisible by 4");
  model.stage1_fingerprint = model.fingerprint();
  model.revision.emplace(nn::RevisionConfig{.base_channels = cfg.base_channels, .residual_blocks = cfg.revision_blocks},
                         mix_seed(cfg.seed, kRevisionStream));
  const bool adversarial = cfg.adversarial;
  std::optional<nn::Critic> critic;
  if (adversarial) {
    critic.emplace(nn::CriticConfig{.base_channels = cfg.critic_channels, .in_channels = 4, .wrap_theta = false,
                                    .clip = cfg.clip, .n_critic = cfg.n_critic},
                   mix_seed(cfg.seed, kCriticStream));
  }

  // Stage-1 networks are frozen, so their outputs are computed once per sample.
  const auto train = train_indices(manifest);
  std::vector<Planar> inputs(train.size()), maps(train.size()), targets(train.size()), masks(train.size());
  parallel_for(train.size(), [&](std::size_t k) {
    Model local = model;
    const SampleData d = load_sample(manifest, train[k], kPolarFisheye | kFillBand | kGroundTruth | kMask);
    const Stage1Output s1 = run_stage1(local, d.polar_fisheye, d.fill_band);
    inputs[k] = detail::to_planar(to_cartesian(s1.polar_composite, manifest.grid, h, w), true);
    maps[k] = detail::to_planar(expand_level_map(s1.level, h, w, {manifest.grid.center_x, manifest.grid.center_y}),
                                false);
    targets[k] = detail::to_planar(d.gt, true);
    masks[k] = detail::to_planar(d.mask);
  });
  const std::vector<Planar> ones{detail::ones_planar(h, w)};

  const double lr = cfg.effective_lr();
  ad::AdamState<float> rev_adam = ad::make_adam(model.revision->params(), lr, cfg.beta1, cfg.beta2);
  std::optional<ad::AdamState<float>> critic_adam;
  if (adversarial) critic_adam = ad::make_adam(critic->params(), lr, cfg.beta1, cfg.beta2);

  Rng rng(mix_seed(cfg.seed, kBatchStream));
  for (int it = 1; it <= cfg.iters; ++it) {
    const auto pick = detail::draw_batch(rng, train.size(), cfg.batch);
    const std::vector<std::size_t> zeros(pick.size(), 0);
    LossRow row{it};
    ad::Graph<float> g;
    const ad::Tensor<float> target = detail::stack(targets, pick);
    const ad::Var xv = g.constant(detail::stack(inputs, pick));
    const ad::Var out = model.revision->forward(g, model.revision->params(), xv, g.constant(detail::stack(maps, pick)));
    const ad::Var l_pr = nn::pyramid_recon_loss<float>(g, out, g.constant(target), g.constant(detail::stack(ones, zeros)),
                                                       nn::kStage2LevelWeights);
    std::vector<ad::Var> terms{l_pr};
    std::vector<double> coefs{1.0};
    ad::Var l_ad;
    if (adversarial) {
      const ad::Tensor<float> mask = detail::stack(masks, pick);
      critic_updates(*critic, *critic_adam, target, values_of(g, out), mask, cfg);
      l_ad = ad::scale(g, ad::mean(g, critic->forward(g, critic->params(), out, g.constant(mask))), -1.0);
      terms.push_back(l_ad);
      coefs.push_back(cfg.weights.adversarial);
    }
    const ad::Var total = ad::weighted_sum<float>(g, terms, coefs);
    row.pr = g.item(l_pr);
    if (l_ad.valid()) row.ad = g.item(l_ad);
    check_finite(row, g.item(total));
    g.backward(total);
    ad::adam_step(model.revision->params(), rev_adam);
    if (critic) critic->params().zero_grad();
    model.generator->params().zero_grad();
    model.perception->params().zero_grad();

    res.log.push_back(row);
    log::debug("stage2 iter {} loss_pr {:.6f} loss_ad {:.6f}", it, row.pr, row.ad);
    if (hook) hook(row, model);
    if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0 && it != cfg.iters) save_model(model, out_dir);
  }

  save_model(model, out_dir);
  if (critic) ad::write_checkpoint(out_dir / "critic_cart.ckp", critic->params());
  write_log(out_dir, res.log, "stage 2 training loss");
  log::info("stage 2: {} iterations, final loss_pr {:.6f}", cfg.iters, res.log.back().pr);
  return res;
}

double perception_error(Model& model, const Manifest& manifest, const std::string& split) {
  if (!model.perception) fail(ErrorCode::config_mismatch, "model has no perception network");
  const auto idx = manifest.indices(split);
  if (idx.empty()) fail(ErrorCode::missing_data, "no samples in split '" + split + "'");
  std::vector<double> errors(idx.size());
  parallel_for(idx.size(), [&](std::size_t k) {
    const SampleData d = load_sample(manifest, idx[k], kPolarFisheye | kLevel);
    const std::vector<Planar> xs{detail::to_planar(d.polar_fisheye, true)};
    const std::size_t pick[] = {0};
    ad::Graph<float> g;
    const ad::Var pred = model.perception->forward(g, model.perception->params(), g.constant(detail::stack(xs, pick)));
    DistortionLevelVector v{{g.value(pred).begin(), g.value(pred).end()}, manifest.grid.rho_max};
    errors[k] = vector_l1(v, d.level);
  });
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(errors.size());
}

}  // namespace fisheyex::pipeline
