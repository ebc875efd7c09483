#pragma once

#include <optional>
#include <span>

#include "fisheyex/ad/graph.hpp"

namespace fisheyex::ad {

enum class PadMode { zero, wrap };

/// Wrap padding is only meaningful on the width (theta) axis.
struct ConvOptions {
  int stride = 1;
  int dilation = 1;
  int pad_h = 0;
  int pad_w = 0;
  PadMode mode_h = PadMode::zero;
  PadMode mode_w = PadMode::zero;

  /// "Same" padding for a k x k kernel at this dilation.
  static ConvOptions same(int kernel, int stride = 1, int dilation = 1, bool wrap_w = false) {
    const int pad = dilation * (kernel - 1) / 2;
    return {stride, dilation, pad, pad, PadMode::zero, wrap_w ? PadMode::wrap : PadMode::zero};
  }
};

/// Cross-correlation, x (N, Cin, H, W), weight (Cout, Cin, K, K), bias (Cout).
/// Output spatial size floor((H + 2 pad - dilation (K - 1) - 1) / stride) + 1.
template <typename T>
Var conv2d(Graph<T>& g, Var x, Var weight, std::optional<Var> bias, const ConvOptions& opt);

/// Doubles H and W with align-corners-false bilinear weights; edges clamp, or
/// wrap along width when `wrap_w` is set.
template <typename T>
Var upsample2x(Graph<T>& g, Var x, bool wrap_w = false);

/// 2x2 mean; equals align-corners-false bilinear halving. H and W must be even.
template <typename T>
Var avg_pool2x(Graph<T>& g, Var x);

/// Mean over the width axis: (N, C, H, W) -> (N, C, H, 1).
template <typename T>
Var mean_over_width(Graph<T>& g, Var x);

/// Mean over height and width: (N, C, H, W) -> (N, C, 1, 1).
template <typename T>
Var global_avg_pool(Graph<T>& g, Var x);

/// x flattened per batch item to (N, in); weight (out, in); bias (out).
/// Result (N, out, 1, 1).
template <typename T>
Var linear(Graph<T>& g, Var x, Var weight, std::optional<Var> bias);

/// Per (item, channel) plane: (x - mean) / sqrt(var + eps), biased variance,
/// then gain[c] * . + shift[c].
template <typename T>
Var instance_norm(Graph<T>& g, Var x, Var gain, Var shift, double eps = 1e-5);

enum class Activation { leaky_relu, relu, tanh };

inline constexpr double kLeakySlope = 0.2;

/// Elementwise; at the kink the derivative is taken from the positive side.
template <typename T>
Var activation(Graph<T>& g, Activation kind, Var x);

template <typename T>
Var add(Graph<T>& g, Var a, Var b);
template <typename T>
Var sub(Graph<T>& g, Var a, Var b);
template <typename T>
Var mul(Graph<T>& g, Var a, Var b);
template <typename T>
Var scale(Graph<T>& g, Var a, double factor);
/// a + c elementwise for a constant c.
template <typename T>
Var add_scalar(Graph<T>& g, Var a, double c);

template <typename T>
Var concat_channels(Graph<T>& g, std::span<const Var> parts);

/// out = mask ? when_one : when_zero, mask (N, 1, H, W) broadcast over channels.
/// No gradient flows into the mask.
template <typename T>
Var select(Graph<T>& g, Var mask, Var when_one, Var when_zero);

template <typename T>
Var sum(Graph<T>& g, Var x);
template <typename T>
Var mean(Graph<T>& g, Var x);

/// sum(w * (p - t)^2) / (C * sum(w)) with weight (N, 1, H, W) broadcast over
/// channels; 0 when the weight is all zero.
template <typename T>
Var masked_mse(Graph<T>& g, Var pred, Var target, Var weight);

/// mean |p - t|; the derivative at p == t is 0.
template <typename T>
Var l1_mean(Graph<T>& g, Var pred, Var target);

template <typename T>
Var weighted_sum(Graph<T>& g, std::span<const Var> scalars, std::span<const double> weights);

}  // namespace fisheyex::ad
