#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fisheyex/nn/losses.hpp"
#include "fisheyex/pipeline/dataset.hpp"
#include "fisheyex/pipeline/model.hpp"

namespace fisheyex::pipeline {

struct TrainConfig {
  int stage = 1;
  int iters = 1000;
  int batch = 4;
  /// 0 picks the stage default: 1e-3 for stage 1, 5e-4 for stage 2.
  double lr = 0.0;
  double beta1 = 0.5;
  double beta2 = 0.9;
  std::uint64_t seed = 0;
  nn::LossWeights weights;
  bool adversarial = true;
  /// Stage-1 switches; at least one must be on.
  bool train_outpaint = true;
  bool train_perception = true;
  /// Also write the model every this many iterations; 0 writes it only at the end.
  int checkpoint_every = 0;
  int base_channels = 16;
  int perception_hidden = 64;
  int revision_blocks = 9;
  int critic_channels = 16;
  int n_critic = 5;
  double clip = 0.01;

  double effective_lr() const { return lr > 0.0 ? lr : (stage == 2 ? 5e-4 : 1e-3); }
  void validate() const;
};

/// One log row per iteration; unused terms are 0.
struct LossRow {
  int iter = 0;
  double pr = 0.0;
  double ad = 0.0;
  double sd = 0.0;

  bool operator==(const LossRow&) const = default;
};

/// "iter loss_pr loss_ad loss_sd", shortest round-trip decimal for each float.
std::string format_loss_row(const LossRow& row);
LossRow parse_loss_row(const std::string& line);
std::vector<LossRow> parse_loss_log(const std::string& text);

/// Trailing moving average with the given window (shorter at the start).
std::vector<double> smooth(const std::vector<double>& values, int window);

struct TrainResult {
  Model model;
  std::vector<LossRow> log;
};

/// Called after every iteration with the row just logged.
using IterationHook = std::function<void(const LossRow&, const Model&)>;

/// Jointly trains generator and perception (and the polar critic when
/// adversarial) on the manifest's train split. Writes model files,
/// loss_log.txt and loss_curve.svg into out_dir.
TrainResult train_stage1(const Manifest& manifest, const TrainConfig& config, const std::filesystem::path& out_dir,
                         const IterationHook& hook = {});

/// Trains the revision network (and the Cartesian critic when adversarial)
/// with the stage-1 model in `stage1_dir` frozen. out_dir receives a complete
/// model: stage-1 checkpoints copied unchanged plus the revision network.
TrainResult train_stage2(const Manifest& manifest, const std::filesystem::path& stage1_dir,
                         const TrainConfig& config, const std::filesystem::path& out_dir,
                         const IterationHook& hook = {});

/// Mean vector_l1 of the perception network over a split.
double perception_error(Model& model, const Manifest& manifest, const std::string& split);

}  // namespace fisheyex::pipeline
