#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fisheyex/nn/layers.hpp"

namespace fisheyex::nn {

struct GeneratorConfig {
  int base_channels = 16;
  /// Wrap padding along width; on for polar rasters (theta axis), off for Cartesian ones.
  bool wrap_theta = true;
  std::array<int, 4> dilations{2, 4, 8, 16};
};

struct PerceptionConfig {
  int base_channels = 16;
  int hidden = 64;
  int n_rho = 96;
  bool wrap_theta = true;
};

struct RevisionConfig {
  int base_channels = 16;
  int residual_blocks = 9;
};

struct CriticConfig {
  int base_channels = 16;
  /// Image channels plus the region mask.
  int in_channels = 4;
  bool wrap_theta = false;
  double clip = 0.01;
  int n_critic = 5;
};

/// Encoder-decoder over (image, fill mask): three resolutions with two convs
/// each, a dilated residual group at 1/4 scale, bilinear x2 decoder with skip
/// concatenation, tanh output.
class Generator {
 public:
  Generator(const GeneratorConfig& config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }
  ad::ParamStore<float>& params() { return params_; }
  const ad::ParamStore<float>& params() const { return params_; }

  /// image (N, 3, H, W) signed range, mask (N, 1, H, W) with 1 = fill; H and
  /// W divisible by 4. Returns the raw tanh output.
  template <typename T>
  ad::Var forward(ad::Graph<T>& g, ad::ParamStore<T>& p, ad::Var image, ad::Var mask) const;

  /// Generated pixels where mask = 1, input pixels elsewhere.
  template <typename T>
  ad::Var composite(ad::Graph<T>& g, ad::ParamStore<T>& p, ad::Var image, ad::Var mask) const {
    return ad::select(g, mask, forward(g, p, image, mask), image);
  }

 private:
  GeneratorConfig config_;
  ad::ParamStore<float> params_;
  std::array<ConvLayer, 6> encoder_;
  std::array<ConvLayer, 4> dilated_;
  std::array<ConvLayer, 4> decoder_;
  ConvLayer out_;
};

/// Stride-2 conv encoder over the polar raster, mean over theta, then two
/// fully connected layers to one distortion level per rho row. The last
/// layer starts at zero weights with bias 1 (the identity distortion).
class Perception {
 public:
  Perception(const PerceptionConfig& config, std::uint64_t seed);

  const PerceptionConfig& config() const { return config_; }
  ad::ParamStore<float>& params() { return params_; }
  const ad::ParamStore<float>& params() const { return params_; }

  /// polar (N, 3, n_rho, n_theta) -> (N, n_rho, 1, 1).
  template <typename T>
  ad::Var forward(ad::Graph<T>& g, ad::ParamStore<T>& p, ad::Var polar) const;

 private:
  PerceptionConfig config_;
  ad::ParamStore<float> params_;
  std::array<ConvLayer, 4> encoder_;
  DenseLayer hidden_;
  DenseLayer head_;
};

/// Cartesian refinement over (image, level map): three base convs (last two
/// stride 2), residual blocks x + norm(relu(conv x)), two bilinear x2 + conv
/// stages, tanh output.
class Revision {
 public:
  Revision(const RevisionConfig& config, std::uint64_t seed);

  const RevisionConfig& config() const { return config_; }
  ad::ParamStore<float>& params() { return params_; }
  const ad::ParamStore<float>& params() const { return params_; }

  /// image (N, 3, H, W), level map (N, 1, H, W); H and W divisible by 4.
  template <typename T>
  ad::Var forward(ad::Graph<T>& g, ad::ParamStore<T>& p, ad::Var image, ad::Var level_map) const;

 private:
  RevisionConfig config_;
  ad::ParamStore<float> params_;
  std::array<ConvLayer, 3> base_;
  std::vector<ConvLayer> blocks_;
  std::vector<NormLayer> norms_;
  std::array<ConvLayer, 2> up_;
  ConvLayer out_;
};

/// Four stride-2 convs, global average pool, linear head to one score per item.
class Critic {
 public:
  Critic(const CriticConfig& config, std::uint64_t seed);

  const CriticConfig& config() const { return config_; }
  ad::ParamStore<float>& params() { return params_; }
  const ad::ParamStore<float>& params() const { return params_; }

  /// image (N, C-1, H, W) and mask (N, 1, H, W) -> (N, 1, 1, 1).
  template <typename T>
  ad::Var forward(ad::Graph<T>& g, ad::ParamStore<T>& p, ad::Var image, ad::Var mask) const;

 private:
  CriticConfig config_;
  ad::ParamStore<float> params_;
  std::array<ConvLayer, 4> encoder_;
  DenseLayer head_;
};

/// key=value lines, one per field, prefixed with `prefix`.
std::string config_text(const GeneratorConfig& c, const std::string& prefix = "generator.");
std::string config_text(const PerceptionConfig& c, const std::string& prefix = "perception.");
std::string config_text(const RevisionConfig& c, const std::string& prefix = "revision.");
std::string config_text(const CriticConfig& c, const std::string& prefix);

/// FNV-1a 64 of the text, as 16 hex digits.
std::string fingerprint(const std::string& text);

}  // namespace fisheyex::nn
