#include "fisheyex/nn/networks.hpp"

#include <algorithm>

#include <fmt/core.h>

#include "fisheyex/error.hpp"

namespace fisheyex::nn {

using ad::Graph;
using ad::ParamStore;
using ad::Var;

Generator::Generator(const GeneratorConfig& config, std::uint64_t seed) : config_(config) {
  const int c = config.base_channels;
  if (c < 1) fail(ErrorCode::invalid_argument, "generator base_channels must be >= 1");
  const bool wrap = config.wrap_theta;
  LayerFactory f(params_, seed);
  encoder_ = {f.conv("enc1a", 4, c, 3, 1, 1, wrap),         f.conv("enc1b", c, c, 3, 1, 1, wrap),
              f.conv("enc2a", c, 2 * c, 3, 2, 1, wrap),     f.conv("enc2b", 2 * c, 2 * c, 3, 1, 1, wrap),
              f.conv("enc3a", 2 * c, 4 * c, 3, 2, 1, wrap), f.conv("enc3b", 4 * c, 4 * c, 3, 1, 1, wrap)};
  for (std::size_t i = 0; i < dilated_.size(); ++i) {
    dilated_[i] = f.conv(fmt::format("dil{}", config.dilations[i]), 4 * c, 4 * c, 3, 1, config.dilations[i], wrap);
  }
  decoder_ = {f.conv("dec2a", 6 * c, 2 * c, 3, 1, 1, wrap), f.conv("dec2b", 2 * c, 2 * c, 3, 1, 1, wrap),
              f.conv("dec1a", 3 * c, c, 3, 1, 1, wrap), f.conv("dec1b", c, c, 3, 1, 1, wrap)};
  out_ = f.conv("out", c, 3, 3, 1, 1, wrap, 1.0);
}

template <typename T>
Var Generator::forward(Graph<T>& g, ParamStore<T>& p, Var image, Var mask) const {
  const ad::Shape s = g.shape(image);
  if (s.c() != 3 || s.h() % 4 != 0 || s.w() % 4 != 0) {
    fail(ErrorCode::shape_mismatch, "generator needs (N, 3, H, W) input with H, W divisible by 4, got " +
                                        s.to_string());
  }
  const Var in_parts[] = {image, mask};
  Var x = ad::concat_channels<T>(g, in_parts);
  x = lrelu(g, apply(g, p, encoder_[0], x));
  const Var skip1 = lrelu(g, apply(g, p, encoder_[1], x));
  x = lrelu(g, apply(g, p, encoder_[2], skip1));
  const Var skip2 = lrelu(g, apply(g, p, encoder_[3], x));
  x = lrelu(g, apply(g, p, encoder_[4], skip2));
  x = lrelu(g, apply(g, p, encoder_[5], x));
  for (const ConvLayer& layer : dilated_) x = ad::add(g, x, lrelu(g, apply(g, p, layer, x)));

  const Var up2[] = {ad::upsample2x(g, x, config_.wrap_theta), skip2};
  x = lrelu(g, apply(g, p, decoder_[0], ad::concat_channels<T>(g, up2)));
  x = lrelu(g, apply(g, p, decoder_[1], x));
  const Var up1[] = {ad::upsample2x(g, x, config_.wrap_theta), skip1};
  x = lrelu(g, apply(g, p, decoder_[2], ad::concat_channels<T>(g, up1)));
  x = lrelu(g, apply(g, p, decoder_[3], x));
  return ad::activation(g, ad::Activation::tanh, apply(g, p, out_, x));
}

Perception::Perception(const PerceptionConfig& config, std::uint64_t seed) : config_(config) {
  const int c = config.base_channels;
  if (c < 1 || config.hidden < 1 || config.n_rho < 1) {
    fail(ErrorCode::invalid_argument, "perception widths and n_rho must be >= 1");
  }
  const bool wrap = config.wrap_theta;
  LayerFactory f(params_, seed);
  encoder_ = {f.conv("enc1", 3, c, 3, 2, 1, wrap), f.conv("enc2", c, 2 * c, 3, 2, 1, wrap),
              f.conv("enc3", 2 * c, 4 * c, 3, 2, 1, wrap), f.conv("enc4", 4 * c, 4 * c, 3, 2, 1, wrap)};
  // Four stride-2 stages leave ceil(n_rho / 16) rows.
  const int rows = (config.n_rho + 15) / 16;
  hidden_ = f.dense("fc1", 4 * c * rows, config.hidden, kReluGain);
  head_ = f.dense("fc2", config.hidden, config.n_rho, 1.0, true, 1.0f);
}

template <typename T>
Var Perception::forward(Graph<T>& g, ParamStore<T>& p, Var polar) const {
  const ad::Shape s = g.shape(polar);
  if (s.c() != 3 || s.h() != config_.n_rho) {
    fail(ErrorCode::shape_mismatch,
         fmt::format("perception expects (N, 3, {}, W) input, got {}", config_.n_rho, s.to_string()));
  }
  Var x = polar;
  for (const ConvLayer& layer : encoder_) x = lrelu(g, apply(g, p, layer, x));
  x = ad::mean_over_width(g, x);
  x = lrelu(g, apply(g, p, hidden_, x));
  return apply(g, p, head_, x);
}

Revision::Revision(const RevisionConfig& config, std::uint64_t seed) : config_(config) {
  const int c = config.base_channels;
  if (c < 1 || config.residual_blocks < 0) fail(ErrorCode::invalid_argument, "invalid revision config");
  LayerFactory f(params_, seed);
  base_ = {f.conv("base1", 4, c, 3), f.conv("base2", c, 2 * c, 3, 2), f.conv("base3", 2 * c, 4 * c, 3, 2)};
  for (int i = 0; i < config.residual_blocks; ++i) {
    blocks_.push_back(f.conv(fmt::format("res{}", i), 4 * c, 4 * c, 3));
    norms_.push_back(f.norm(fmt::format("res{}.norm", i), 4 * c));
  }
  up_ = {f.conv("up1", 4 * c, 2 * c, 3), f.conv("up2", 2 * c, c, 3)};
  out_ = f.conv("out", c, 3, 3, 1, 1, false, 1.0);
}

template <typename T>
Var Revision::forward(Graph<T>& g, ParamStore<T>& p, Var image, Var level_map) const {
  const ad::Shape s = g.shape(image);
  if (s.c() != 3 || s.h() % 4 != 0 || s.w() % 4 != 0) {
    fail(ErrorCode::shape_mismatch, "revision needs (N, 3, H, W) input with H, W divisible by 4, got " +
                                        s.to_string());
  }
  const Var in_parts[] = {image, level_map};
  Var x = ad::concat_channels<T>(g, in_parts);
  for (const ConvLayer& layer : base_) x = lrelu(g, apply(g, p, layer, x));
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Var r = ad::activation(g, ad::Activation::relu, apply(g, p, blocks_[i], x));
    x = ad::add(g, x, apply(g, p, norms_[i], r));
  }
  for (const ConvLayer& layer : up_) x = lrelu(g, apply(g, p, layer, ad::upsample2x(g, x)));
  return ad::activation(g, ad::Activation::tanh, apply(g, p, out_, x));
}

Critic::Critic(const CriticConfig& config, std::uint64_t seed) : config_(config) {
  const int c = config.base_channels;
  if (c < 1 || config.in_channels < 2) fail(ErrorCode::invalid_argument, "invalid critic config");
  const bool wrap = config.wrap_theta;
  LayerFactory f(params_, seed);
  encoder_ = {f.conv("c1", config.in_channels, c, 3, 2, 1, wrap), f.conv("c2", c, 2 * c, 3, 2, 1, wrap),
              f.conv("c3", 2 * c, 4 * c, 3, 2, 1, wrap), f.conv("c4", 4 * c, 4 * c, 3, 2, 1, wrap)};
  head_ = f.dense("head", 4 * c, 1);
  // Start inside the clipping box so the first update does not jump.
  const float bound = static_cast<float>(config.clip);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (float& v : params_.at(i).data) v = std::clamp(v, -bound, bound);
  }
}

template <typename T>
Var Critic::forward(Graph<T>& g, ParamStore<T>& p, Var image, Var mask) const {
  const Var parts[] = {image, mask};
  Var x = ad::concat_channels<T>(g, parts);
  if (g.shape(x).c() != config_.in_channels) {
    fail(ErrorCode::shape_mismatch, fmt::format("critic expects {} input channels", config_.in_channels));
  }
  for (const ConvLayer& layer : encoder_) x = lrelu(g, apply(g, p, layer, x));
  return apply(g, p, head_, ad::global_avg_pool(g, x));
}

template Var Generator::forward(Graph<float>&, ParamStore<float>&, Var, Var) const;
template Var Generator::forward(Graph<double>&, ParamStore<double>&, Var, Var) const;
template Var Perception::forward(Graph<float>&, ParamStore<float>&, Var) const;
template Var Perception::forward(Graph<double>&, ParamStore<double>&, Var) const;
template Var Revision::forward(Graph<float>&, ParamStore<float>&, Var, Var) const;
template Var Revision::forward(Graph<double>&, ParamStore<double>&, Var, Var) const;
template Var Critic::forward(Graph<float>&, ParamStore<float>&, Var, Var) const;
template Var Critic::forward(Graph<double>&, ParamStore<double>&, Var, Var) const;

std::string config_text(const GeneratorConfig& c, const std::string& prefix) {
  return fmt::format("{0}base_channels={1}\n{0}wrap_theta={2}\n{0}dilations={3},{4},{5},{6}\n", prefix,
                     c.base_channels, c.wrap_theta ? 1 : 0, c.dilations[0], c.dilations[1], c.dilations[2],
                     c.dilations[3]);
}

std::string config_text(const PerceptionConfig& c, const std::string& prefix) {
  return fmt::format("{0}base_channels={1}\n{0}hidden={2}\n{0}n_rho={3}\n{0}wrap_theta={4}\n", prefix,
                     c.base_channels, c.hidden, c.n_rho, c.wrap_theta ? 1 : 0);
}

std::string config_text(const RevisionConfig& c, const std::string& prefix) {
  return fmt::format("{0}base_channels={1}\n{0}residual_blocks={2}\n", prefix, c.base_channels, c.residual_blocks);
}

std::string config_text(const CriticConfig& c, const std::string& prefix) {
  return fmt::format("{0}base_channels={1}\n{0}in_channels={2}\n{0}wrap_theta={3}\n", prefix, c.base_channels,
                     c.in_channels, c.wrap_theta ? 1 : 0);
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace fisheyex::nn
