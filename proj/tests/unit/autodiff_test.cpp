#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "fisheyex/ad/adam.hpp"
#include "fisheyex/ad/checkpoint.hpp"
#include "fisheyex/ad/grad_check.hpp"
#include "fisheyex/ad/ops.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/image.hpp"
#include "oracles.hpp"

using namespace fisheyex;
using namespace fisheyex::ad;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

std::size_t add_random(ParamStore<double>& store, const std::string& name, Shape shape, std::uint64_t seed,
                       double lo = -1.0, double hi = 1.0) {
  const std::size_t i = store.add(name, shape);
  store.at(i).data = random_values(shape.numel(), seed, lo, hi);
  return i;
}

// Reduces an op output to a scalar through a fixed random projection so every
// output element contributes a distinct weight.
Var project(Graph<double>& g, Var out, std::uint64_t seed) {
  const Shape s = g.shape(out);
  const Var r = g.constant(s, random_values(s.numel(), seed));
  return sum(g, mul(g, out, r));
}

GradCheckReport check(const std::function<Var(Graph<double>&)>& build, ParamStore<double>& store) {
  GradCheckOptions opt;
  opt.max_coords_per_tensor = 40;
  return grad_check(build, store, opt);
}

}  // namespace

TEST(Conv2d, OneByOneIdentity) {
  Graph<float> g;
  const Var x = g.constant(Shape::nchw(1, 1, 3, 4), {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const Var w = g.constant(Shape::nchw(1, 1, 1, 1), {1});
  const Var b = g.constant(Shape::vector(1), {0});
  const Var y = conv2d(g, x, w, b, ConvOptions{});
  EXPECT_EQ(std::vector<float>(g.value(y).begin(), g.value(y).end()),
            std::vector<float>(g.value(x).begin(), g.value(x).end()));
}

TEST(Conv2d, OnesKernelOnConstant) {
  Graph<float> g;
  const Var x = g.constant(Shape::nchw(1, 1, 5, 5), std::vector<float>(25, 0.5f));
  const Var w = g.constant(Shape::nchw(1, 1, 3, 3), std::vector<float>(9, 1.0f));
  const Var y = conv2d<float>(g, x, w, std::nullopt, ConvOptions::same(3));
  for (int r = 1; r < 4; ++r)
    for (int c = 1; c < 4; ++c) EXPECT_FLOAT_EQ(g.value(y)[r * 5 + c], 4.5f);
  EXPECT_FLOAT_EQ(g.value(y)[0], 2.0f);
}

TEST(Conv2d, DilatedMatchesLoopOracle) {
  const auto xv = random_values(1 * 3 * 6 * 7, 1);
  const auto wv = random_values(2 * 3 * 3 * 3, 2);
  const auto bv = random_values(2, 3);
  for (int stride : {1, 2}) {
    Graph<double> g;
    const Var x = g.constant(Shape::nchw(1, 3, 6, 7), xv);
    const Var w = g.constant(Shape::nchw(2, 3, 3, 3), wv);
    const Var b = g.constant(Shape::vector(2), bv);
    const Var y = conv2d(g, x, w, b, ConvOptions::same(3, stride, 2));
    const auto ref = oracle::conv_loops(xv, 1, 3, 6, 7, wv, 2, 3, bv, stride, 2, 2);
    ASSERT_EQ(g.value(y).size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(g.value(y)[i], ref[i], 1e-5);
  }
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  for (bool wrap : {false, true}) {
    for (int stride : {1, 2}) {
      ParamStore<double> store;
      const auto ix = add_random(store, "x", Shape::nchw(2, 3, 6, 8), 4);
      const auto iw = add_random(store, "w", Shape::nchw(2, 3, 3, 3), 5);
      const auto ib = add_random(store, "b", Shape::vector(2), 6);
      const auto report = check(
          [&](Graph<double>& g) {
            const Var y = conv2d(g, g.parameter(store.at(ix)), g.parameter(store.at(iw)),
                                 g.parameter(store.at(ib)), ConvOptions::same(3, stride, 2, wrap));
            return project(g, y, 7);
          },
          store);
      EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
      EXPECT_GT(report.checked, 50u);
    }
  }
}

TEST(Conv2d, WrapOnHeightRejected) {
  Graph<double> g;
  const Var x = g.constant(Shape::nchw(1, 1, 4, 4), std::vector<double>(16, 1.0));
  const Var w = g.constant(Shape::nchw(1, 1, 3, 3), std::vector<double>(9, 1.0));
  ConvOptions opt = ConvOptions::same(3);
  opt.mode_h = PadMode::wrap;
  try {
    conv2d<double>(g, x, w, std::nullopt, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
  const Var bad = g.constant(Shape::nchw(1, 2, 3, 3), std::vector<double>(18, 1.0));
  EXPECT_THROW(conv2d<double>(g, x, bad, std::nullopt, ConvOptions::same(3)), Error);
}

TEST(Conv2d, WrapPaddingCommutesWithColumnShift) {
  const int h = 5, w = 12, shift = 5;
  const auto xv = random_values(2 * h * w, 8);
  std::vector<double> shifted(xv.size());
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) shifted[(c * h + r) * w + (col + shift) % w] = xv[(c * h + r) * w + col];
  const auto wv = random_values(3 * 2 * 3 * 3, 9);
  Graph<double> g;
  const Var wt = g.constant(Shape::nchw(3, 2, 3, 3), wv);
  const Var a = conv2d<double>(g, g.constant(Shape::nchw(1, 2, h, w), xv), wt, std::nullopt,
                               ConvOptions::same(3, 1, 2, true));
  const Var b = conv2d<double>(g, g.constant(Shape::nchw(1, 2, h, w), shifted), wt, std::nullopt,
                               ConvOptions::same(3, 1, 2, true));
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col)
        EXPECT_NEAR(g.value(b)[(c * h + r) * w + (col + shift) % w], g.value(a)[(c * h + r) * w + col], 1e-12);
}

TEST(Upsample, ConstantStaysConstant) {
  Graph<float> g;
  const Var y = upsample2x(g, g.constant(Shape::nchw(1, 2, 3, 3), std::vector<float>(18, 0.7f)));
  EXPECT_EQ(g.shape(y), Shape::nchw(1, 2, 6, 6));
  for (float v : g.value(y)) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(Upsample, MatchesImageResize) {
  const std::vector<float> ramp{0.1f, 0.4f, 0.6f, 0.9f};
  Graph<float> g;
  const Var y = upsample2x(g, g.constant(Shape::nchw(1, 1, 2, 2), ramp));
  const ImageBuffer ref = resize_bilinear(ImageBuffer(2, 2, 1, ramp), 4, 4);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(g.value(y)[i], ref.data()[i], 1e-6);
}

TEST(Upsample, Gradients) {
  for (bool wrap : {false, true}) {
    ParamStore<double> store;
    const auto ix = add_random(store, "x", Shape::nchw(2, 2, 3, 4), 10);
    const auto report = check(
        [&](Graph<double>& g) { return project(g, upsample2x(g, g.parameter(store.at(ix)), wrap), 11); }, store);
    EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
  }
}

TEST(Pooling, AvgPoolMeanOverWidthGlobalPoolGradients) {
  ParamStore<double> store;
  const auto ix = add_random(store, "x", Shape::nchw(2, 3, 4, 6), 12);
  auto report = check([&](Graph<double>& g) { return project(g, avg_pool2x(g, g.parameter(store.at(ix))), 13); },
                      store);
  EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
  report = check([&](Graph<double>& g) { return project(g, mean_over_width(g, g.parameter(store.at(ix))), 14); },
                 store);
  EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
  report = check([&](Graph<double>& g) { return project(g, global_avg_pool(g, g.parameter(store.at(ix))), 15); },
                 store);
  EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
}

TEST(Pooling, AvgPoolEqualsBilinearHalving) {
  const auto xv = random_values(16, 16, 0.0, 1.0);
  Graph<float> g;
  const Var y = avg_pool2x(g, g.constant(Shape::nchw(1, 1, 4, 4), std::vector<float>(xv.begin(), xv.end())));
  const ImageBuffer ref = resize_bilinear(ImageBuffer(4, 4, 1, std::vector<float>(xv.begin(), xv.end())), 2, 2);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(g.value(y)[i], ref.data()[i], 1e-6);
}

TEST(Linear, IdentityAndBias) {
  Graph<double> g;
  const Var x = g.constant(Shape::matrix(2, 3), {1, 2, 3, 4, 5, 6});
  const Var eye = g.constant(Shape::matrix(3, 3), {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const Var zero_b = g.constant(Shape::vector(3), {0, 0, 0});
  const Var y = linear(g, x, eye, zero_b);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(g.value(y)[i], i + 1.0);
  const Var zero_w = g.constant(Shape::matrix(3, 3), std::vector<double>(9, 0.0));
  const Var b = g.constant(Shape::vector(3), {7, 8, 9});
  const Var z = linear(g, x, zero_w, b);
  EXPECT_EQ(g.value(z)[4], 8.0);
}

TEST(Linear, MatchesMatmulAndGradients) {
  ParamStore<double> store;
  const auto ix = add_random(store, "x", Shape::nchw(3, 2, 2, 2), 17);
  const auto iw = add_random(store, "w", Shape::matrix(5, 8), 18);
  const auto ib = add_random(store, "b", Shape::vector(5), 19);
  Graph<double> g;
  const Var y = linear(g, g.constant(store.at(ix)), g.constant(store.at(iw)), g.constant(store.at(ib)));
  for (int n = 0; n < 3; ++n)
    for (int o = 0; o < 5; ++o) {
      double acc = store.at(ib).data[o];
      for (int i = 0; i < 8; ++i) acc += store.at(ix).data[n * 8 + i] * store.at(iw).data[o * 8 + i];
      EXPECT_NEAR(g.value(y)[n * 5 + o], acc, 1e-12);
    }
  const auto report = check(
      [&](Graph<double>& gr) {
        return project(gr, linear(gr, gr.parameter(store.at(ix)), gr.parameter(store.at(iw)),
                                  gr.parameter(store.at(ib))), 20);
      },
      store);
  EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
}

TEST(InstanceNorm, ClosedForms) {
  Graph<double> g;
  const Var one = g.constant(Shape::vector(1), {1.0});
  const Var zero = g.constant(Shape::vector(1), {0.0});
  const Var c = instance_norm(g, g.constant(Shape::nchw(1, 1, 2, 2), {3, 3, 3, 3}), one, zero);
  for (double v : g.value(c)) EXPECT_EQ(v, 0.0);
  const Var pm = instance_norm(g, g.constant(Shape::nchw(1, 1, 1, 2), {-1, 1}), one, zero);
  EXPECT_NEAR(g.value(pm)[0], -1.0 / std::sqrt(1.0 + 1e-5), 1e-12);
  EXPECT_NEAR(g.value(pm)[1], 1.0 / std::sqrt(1.0 + 1e-5), 1e-12);
  EXPECT_THROW(instance_norm(g, g.constant(Shape::nchw(1, 1, 1, 1), {2}), one, zero), Error);
}

TEST(InstanceNorm, DirectFormulaAndGradients) {
  ParamStore<double> store;
  const auto ix = add_random(store, "x", Shape::nchw(2, 3, 3, 4), 21);
  const auto ig = add_random(store, "gain", Shape::vector(3), 22, 0.5, 1.5);
  const auto is = add_random(store, "shift", Shape::vector(3), 23);
  Graph<double> g;
  const Var y = instance_norm(g, g.constant(store.at(ix)), g.constant(store.at(ig)), g.constant(store.at(is)));
  for (int p = 0; p < 6; ++p) {
    const double* v = store.at(ix).data.data() + p * 12;
    double mean = 0, var = 0;
    for (int i = 0; i < 12; ++i) mean += v[i] / 12;
    for (int i = 0; i < 12; ++i) var += (v[i] - mean) * (v[i] - mean) / 12;
    for (int i = 0; i < 12; ++i) {
      const double ref = store.at(ig).data[p % 3] * (v[i] - mean) / std::sqrt(var + 1e-5) + store.at(is).data[p % 3];
      EXPECT_NEAR(g.value(y)[p * 12 + i], ref, 1e-5);
    }
  }
  const auto report = check(
      [&](Graph<double>& gr) {
        return project(gr, instance_norm(gr, gr.parameter(store.at(ix)), gr.parameter(store.at(ig)),
                                         gr.parameter(store.at(is))), 24);
      },
      store);
  EXPECT_LE(report.max_rel_error, 1e-4) << report.worst;
}

TEST(Activation, PointValues) {
  Graph<double> g;
  const Var x = g.constant(Shape::vector(3), {-1.0, 0.0, -3.0});
  EXPECT_DOUBLE_EQ(g.value(activation(g, Activation::leaky_relu, x))[0], -0.2);
  EXPECT_EQ(g.value(activation(g, Activation::tanh, x))[1], 0.0);
  EXPECT_EQ(g.value(activation(g, Activation::relu, x))[2], 0.0);
}

TEST(Activation, TanhStrictlyInsideUnitInterval) {
  Graph<float> g;
  const Var y = activation(g, Activation::tanh, g.constant(Shape::vector(4), {50.0f, -50.0f, 9.0f, -9.0f}));
  for (float v : g.value(y)) {
    EXPECT_LT(v, 1.0f);
    EXPECT_GT(v, -1.0f);
  }
}

TEST(Activation, GradientsAwayFromKinks) {
  for (Activation kind : {Activation::leaky_relu, Activation::relu, Activation::tanh}) {
    ParamStore<double> store;
    const auto ix = add_random(store, "x", Shape::vector(64), 25, -2.0, 2.0);
    for (double& v : store.at(ix).data)
      if (std::abs(v) < 1e-3) v = 0.5;
    const auto report = check(
        [&](Graph<double>& g) { return project(g, activation(g, kind, g.parameter(store.at(ix))), 26); }, store);
    EXPECT_LE(report.max_rel_error, 1e-6) << report.worst;
    EXPECT_EQ(report.excluded, 0u);
  }
}

TEST(Activation, KinkAdjacentCoordinatesExcluded) {
  ParamStore<double> store;
  const auto ix = store.add("x", Shape::vector(3));
  store.at(ix).data = {0.5, 2e-6, -0.7};
  const auto report = check(
      [&](Graph<double>& g) { return project(g, activation(g, Activation::relu, g.parameter(store.at(ix))), 27); },
      store);
  EXPECT_EQ(report.excluded, 1u);
  EXPECT_EQ(report.checked, 2u);
}

TEST(ElementwiseOps, Gradients) {
  ParamStore<double> store;
  const auto ia = add_random(store, "a", Shape::nchw(2, 2, 3, 3), 28);
  const auto ib = add_random(store, "b", Shape::nchw(2, 2, 3, 3), 29);
  const auto ic = add_random(store, "c", Shape::nchw(2, 1, 3, 3), 30);
  const auto report = check(
      [&](Graph<double>& g) {
        const Var a = g.parameter(store.at(ia));
        const Var b = g.parameter(store.at(ib));
        const Var c = g.parameter(store.at(ic));
        const Var s = add_scalar(g, scale(g, sub(g, mul(g, a, b), add(g, a, b)), 0.7), 0.3);
        const Var parts[] = {s, c, a};
        return project(g, concat_channels<double>(g, parts), 31);
      },
      store);
  EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
}

TEST(Select, RoutesByMaskWithoutMaskGradient) {
  ParamStore<double> store;
  const auto ia = add_random(store, "a", Shape::nchw(1, 2, 2, 2), 32);
  const auto ib = add_random(store, "b", Shape::nchw(1, 2, 2, 2), 33);
  Graph<double> g;
  const Var m = g.constant(Shape::nchw(1, 1, 2, 2), {1, 0, 0, 1});
  const Var y = select(g, m, g.constant(store.at(ia)), g.constant(store.at(ib)));
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(g.value(y)[c * 4 + 0], store.at(ia).data[c * 4 + 0]);
    EXPECT_EQ(g.value(y)[c * 4 + 1], store.at(ib).data[c * 4 + 1]);
  }
  const auto report = check(
      [&](Graph<double>& gr) {
        const Var mask = gr.constant(Shape::nchw(1, 1, 2, 2), {1, 0, 0, 1});
        return project(gr, select(gr, mask, gr.parameter(store.at(ia)), gr.parameter(store.at(ib))), 34);
      },
      store);
  EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
}

TEST(Reductions, MaskedMseL1WeightedSum) {
  ParamStore<double> store;
  const auto ip = add_random(store, "p", Shape::nchw(2, 3, 4, 4), 35);
  const auto it = add_random(store, "t", Shape::nchw(2, 3, 4, 4), 36);
  std::vector<double> wv = random_values(32, 37);
  for (double& v : wv) v = v > 0 ? 1.0 : 0.0;
  const auto report = check(
      [&](Graph<double>& g) {
        const Var p = g.parameter(store.at(ip));
        const Var t = g.parameter(store.at(it));
        const Var w = g.constant(Shape::nchw(2, 1, 4, 4), wv);
        const Var terms[] = {masked_mse(g, p, t, w), l1_mean(g, p, t), mean(g, p)};
        const double weights[] = {1.0, 0.5, 0.25};
        return weighted_sum<double>(g, terms, weights);
      },
      store);
  EXPECT_LE(report.max_rel_error, 1e-5) << report.worst;
}

TEST(Reductions, MaskedMseValue) {
  Graph<double> g;
  const Var p = g.constant(Shape::nchw(1, 2, 1, 2), {1, 2, 3, 4});
  const Var t = g.constant(Shape::nchw(1, 2, 1, 2), {0, 0, 0, 0});
  const Var w = g.constant(Shape::nchw(1, 1, 1, 2), {1, 0});
  EXPECT_DOUBLE_EQ(g.item(masked_mse(g, p, t, w)), (1.0 + 9.0) / 2.0);
  const Var none = g.constant(Shape::nchw(1, 1, 1, 2), {0, 0});
  EXPECT_EQ(g.item(masked_mse(g, p, t, none)), 0.0);
}

TEST(GradCheck, SquareAtThree) {
  ParamStore<double> store;
  const auto ix = store.add("x", Shape::scalar());
  store.at(ix).data = {3.0};
  Graph<double> g;
  const Var x = g.parameter(store.at(ix));
  g.backward(mul(g, x, x));
  EXPECT_DOUBLE_EQ(store.at(ix).grad[0], 6.0);
  store.zero_grad();
  const auto report = grad_check([&](Graph<double>& gr) {
    const Var v = gr.parameter(store.at(ix));
    return mul(gr, v, v);
  }, store);
  EXPECT_LE(report.max_rel_error, 1e-9);
}

TEST(GradCheck, ConvTanhMeanNetwork) {
  ParamStore<double> store;
  const auto ix = add_random(store, "x", Shape::nchw(1, 2, 5, 5), 38);
  const auto iw = add_random(store, "w", Shape::nchw(3, 2, 3, 3), 39, -0.5, 0.5);
  const auto ib = add_random(store, "b", Shape::vector(3), 40);
  const auto report = check(
      [&](Graph<double>& g) {
        const Var y = conv2d(g, g.parameter(store.at(ix)), g.parameter(store.at(iw)), g.parameter(store.at(ib)),
                             ConvOptions::same(3));
        return mean(g, activation(g, Activation::tanh, y));
      },
      store);
  EXPECT_LE(report.max_rel_error, 1e-6) << report.worst;
}

TEST(GradCheck, NonFiniteIsReported) {
  ParamStore<double> store;
  const auto ix = store.add("x", Shape::scalar());
  store.at(ix).data = {std::numeric_limits<double>::infinity()};
  try {
    grad_check([&](Graph<double>& g) { return sum(g, g.parameter(store.at(ix))); }, store);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_finite);
  }
}

TEST(Graph, ForwardIsDeterministic) {
  const auto xv = random_values(2 * 3 * 8 * 8, 41);
  const auto wv = random_values(4 * 3 * 3 * 3, 42);
  auto run = [&] {
    Graph<float> g;
    const Var y = conv2d<float>(g, g.constant(Shape::nchw(2, 3, 8, 8), std::vector<float>(xv.begin(), xv.end())),
                                g.constant(Shape::nchw(4, 3, 3, 3), std::vector<float>(wv.begin(), wv.end())),
                                std::nullopt, ConvOptions::same(3, 1, 2));
    return std::vector<float>(g.value(y).begin(), g.value(y).end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParamStore<float> store;
  store.add("w", Shape::vector(3));
  store.at(0).data = {1, -2, 3};
  store.at(0).grad = {0, 0, 0};
  auto state = make_adam(store, 1e-3);
  adam_step(store, state);
  EXPECT_EQ(store.at(0).data, (std::vector<float>{1, -2, 3}));
  EXPECT_TRUE(store.at(0).grad.empty());
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  ParamStore<double> store;
  store.add("w", Shape::vector(2));
  store.at(0).data = {0.5, 0.5};
  store.at(0).grad = {3.0, -0.01};
  auto state = make_adam(store, 1e-3);
  adam_step(store, state);
  EXPECT_NEAR(store.at(0).data[0], 0.5 - 1e-3, 1e-9);
  EXPECT_NEAR(store.at(0).data[1], 0.5 + 1e-3, 1e-8);
}

TEST(Adam, TrajectoryOnSquareMatchesReference) {
  ParamStore<double> store;
  store.add("w", Shape::scalar());
  store.at(0).data = {1.5};
  auto state = make_adam(store, 1e-3);
  oracle::AdamReference ref{1e-3, 0.5, 0.9, 1e-8};
  double w = 1.5;
  for (int i = 0; i < 10; ++i) {
    store.at(0).grad = {2.0 * store.at(0).data[0]};
    w = ref.step(w, 2.0 * w);
    adam_step(store, state);
    EXPECT_NEAR(store.at(0).data[0], w, 1e-7);
  }
}

TEST(Adam, MissingGradientFails) {
  ParamStore<float> store;
  store.add("w", Shape::vector(2));
  auto state = make_adam(store, 1e-3);
  EXPECT_THROW(adam_step(store, state), Error);
  store.set_requires_grad(false);
  EXPECT_NO_THROW(adam_step(store, state));
}

TEST(Adam, ClipBoundsWeights) {
  ParamStore<float> store;
  store.add("w", Shape::vector(4));
  store.at(0).data = {-1.0f, 0.005f, 0.02f, -0.01f};
  clip_weights(store, 0.01);
  for (float v : store.at(0).data) {
    EXPECT_LE(v, 0.01f);
    EXPECT_GE(v, -0.01f);
  }
}

TEST(ParamStore, UniqueNamesAndStableOrder) {
  ParamStore<float> store;
  store.add("b", Shape::vector(1));
  store.add("a", Shape::vector(2));
  EXPECT_EQ(store.name(0), "b");
  EXPECT_EQ(store.index_of("a"), 1u);
  EXPECT_THROW(store.add("a", Shape::vector(1)), Error);
  EXPECT_EQ(store.parameter_count(), 3u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 gen(43);
  ParamStore<float> store;
  store.add("enc.conv0.w", Shape::nchw(4, 3, 3, 3));
  store.add("enc.conv0.b", Shape::vector(4));
  store.add("head.w", Shape::matrix(2, 5));
  store.add("scalar", Shape::scalar());
  for (std::size_t i = 0; i < store.size(); ++i)
    for (float& v : store.at(i).data) v = std::bit_cast<float>(static_cast<std::uint32_t>(gen() & 0xFF7FFFFF));
  const auto bytes = encode_checkpoint(store);
  const ParamStore<float> back = decode_checkpoint(bytes);
  ASSERT_EQ(back.size(), store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    EXPECT_EQ(back.name(i), store.name(i));
    EXPECT_EQ(back.at(i).shape, store.at(i).shape);
    EXPECT_EQ(std::memcmp(back.at(i).data.data(), store.at(i).data.data(), store.at(i).numel() * 4), 0);
  }
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, ErrorsAndMismatch) {
  ParamStore<float> store;
  store.add("w", Shape::vector(3));
  auto bytes = encode_checkpoint(store);
  auto code_of = [](const std::vector<std::uint8_t>& b) {
    try {
      decode_checkpoint(b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_failure;
  };
  EXPECT_EQ(code_of({'C', 'K', 'P', '2', 0, 0, 0, 0}), ErrorCode::bad_magic);
  EXPECT_EQ(code_of(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 2)), ErrorCode::truncated);
  ParamStore<float> other;
  other.add("w", Shape::vector(4));
  try {
    assign_checkpoint(other, store);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_mismatch);
  }
}
