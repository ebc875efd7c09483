#pragma once

#include <array>
#include <span>

#include "fisheyex/ad/ops.hpp"
#include "fisheyex/nn/networks.hpp"

namespace fisheyex::nn {

/// Stage 1 uses equal level weights; stage 2 doubles the full-resolution level.
inline constexpr std::array<double, 3> kStage1LevelWeights{1.0, 1.0, 1.0};
inline constexpr std::array<double, 3> kStage2LevelWeights{2.0, 1.0, 1.0};

/// Masked MSE at full, 1/2 and 1/4 scale, combined with the normalized level
/// weights. `weight` (N, 1, H, W) is 1 where a pixel counts; lower levels use
/// the 2x2-pooled weight, so partially covered pixels count fractionally.
/// H and W must be divisible by 4.
template <typename T>
ad::Var pyramid_recon_loss(ad::Graph<T>& g, ad::Var pred, ad::Var target, ad::Var weight,
                           std::span<const double> level_weights = kStage1LevelWeights);

/// L1 between predicted and ground-truth level vectors.
template <typename T>
ad::Var distortion_loss(ad::Graph<T>& g, ad::Var pred, ad::Var gt) {
  return ad::l1_mean(g, pred, gt);
}

struct WganLosses {
  ad::Var critic;  ///< mean C(fake) - mean C(real)
  ad::Var gen;     ///< -mean C(fake)
};

/// Both losses on one graph; `real` and `fake` share the mask. Detach `fake`
/// (pass it as a constant) when only the critic should train.
template <typename T>
WganLosses wgan_losses(ad::Graph<T>& g, ad::ParamStore<T>& p, const Critic& critic, ad::Var real, ad::Var fake,
                       ad::Var mask);

struct LossWeights {
  double adversarial = 0.05;
  double distortion = 0.1;
};

/// l_pr + w.adversarial * l_ad + w.distortion * l_sd.
double stage1_total_loss(double l_pr, double l_ad, double l_sd, const LossWeights& w = {});

template <typename T>
ad::Var stage1_total_loss(ad::Graph<T>& g, ad::Var l_pr, ad::Var l_ad, ad::Var l_sd, const LossWeights& w = {});

}  // namespace fisheyex::nn
