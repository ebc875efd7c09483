#include "fisheyex/nn/losses.hpp"

#include <cmath>
#include <vector>

#include "fisheyex/error.hpp"

namespace fisheyex::nn {

using ad::Graph;
using ad::Var;

template <typename T>
Var pyramid_recon_loss(Graph<T>& g, Var pred, Var target, Var weight, std::span<const double> level_weights) {
  if (g.shape(pred) != g.shape(target)) fail(ErrorCode::shape_mismatch, "pyramid loss: pred and target differ");
  const ad::Shape s = g.shape(pred);
  const ad::Shape ws = g.shape(weight);
  if (ws.n() != s.n() || ws.c() != 1 || ws.h() != s.h() || ws.w() != s.w()) {
    fail(ErrorCode::shape_mismatch, "pyramid loss: weight must be (N, 1, H, W)");
  }
  if (level_weights.empty()) fail(ErrorCode::invalid_argument, "pyramid loss needs at least one level");
  const int factor = 1 << (level_weights.size() - 1);
  if (s.h() % factor != 0 || s.w() % factor != 0) {
    fail(ErrorCode::shape_mismatch, "pyramid loss: spatial dims must divide by the coarsest level factor");
  }
  double total = 0.0;
  for (double lw : level_weights) total += lw;
  std::vector<Var> terms;
  std::vector<double> coefs;
  for (std::size_t level = 0; level < level_weights.size(); ++level) {
    if (level > 0) {
      pred = ad::avg_pool2x(g, pred);
      target = ad::avg_pool2x(g, target);
      weight = ad::avg_pool2x(g, weight);
    }
    terms.push_back(ad::masked_mse(g, pred, target, weight));
    coefs.push_back(level_weights[level] / total);
  }
  return ad::weighted_sum<T>(g, terms, coefs);
}

template <typename T>
WganLosses wgan_losses(Graph<T>& g, ad::ParamStore<T>& p, const Critic& critic, Var real, Var fake, Var mask) {
  if (g.shape(real) != g.shape(fake)) fail(ErrorCode::shape_mismatch, "wgan losses: real and fake differ");
  const Var mean_real = ad::mean(g, critic.forward(g, p, real, mask));
  const Var mean_fake = ad::mean(g, critic.forward(g, p, fake, mask));
  return {ad::sub(g, mean_fake, mean_real), ad::scale(g, mean_fake, -1.0)};
}

double stage1_total_loss(double l_pr, double l_ad, double l_sd, const LossWeights& w) {
  if (!std::isfinite(l_pr) || !std::isfinite(l_ad) || !std::isfinite(l_sd)) {
    fail(ErrorCode::non_finite, "stage-1 loss term is not finite");
  }
  return l_pr + w.adversarial * l_ad + w.distortion * l_sd;
}

template <typename T>
Var stage1_total_loss(Graph<T>& g, Var l_pr, Var l_ad, Var l_sd, const LossWeights& w) {
  const Var terms[] = {l_pr, l_ad, l_sd};
  const double coefs[] = {1.0, w.adversarial, w.distortion};
  return ad::weighted_sum<T>(g, terms, coefs);
}

#define FISHEYEX_INSTANTIATE_LOSSES(T)                                                                     \
  template Var pyramid_recon_loss(Graph<T>&, Var, Var, Var, std::span<const double>);                     \
  template WganLosses wgan_losses(Graph<T>&, ad::ParamStore<T>&, const Critic&, Var, Var, Var);            \
  template Var stage1_total_loss(Graph<T>&, Var, Var, Var, const LossWeights&);

FISHEYEX_INSTANTIATE_LOSSES(float)
FISHEYEX_INSTANTIATE_LOSSES(double)

}  // namespace fisheyex::nn
