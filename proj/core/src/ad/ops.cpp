#include "fisheyex/ad/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <fmt/core.h>

#include "fisheyex/error.hpp"
#include "fisheyex/parallel.hpp"

namespace fisheyex::ad {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Eigen picks its vectorized summation order from the runtime address of each
// operand, so products and reductions run on owned (aligned) copies to keep
// results independent of where a buffer happened to be allocated.
template <typename T>
RowMat<T> owned(const T* p, Eigen::Index rows, Eigen::Index cols) {
  return ConstMatMap<T>(p, rows, cols);
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::shape_mismatch, what);
}

template <typename T>
void require_same_shape(const Graph<T>& g, Var a, Var b, const char* op) {
  require(g.shape(a) == g.shape(b), fmt::format("{}: shapes {} and {} differ", op, g.shape(a).to_string(),
                                                g.shape(b).to_string()));
}

int positive_mod(int v, int m) { return ((v % m) + m) % m; }

// Source offset (ih * W + iw) for every (kh, kw, oh, ow), or -1 for padding.
struct ConvGeometry {
  int in_c, in_h, in_w, out_c, k_h, k_w, out_h, out_w;
  std::vector<int> source;

  std::size_t taps() const { return static_cast<std::size_t>(k_h) * k_w; }
  std::size_t out_plane() const { return static_cast<std::size_t>(out_h) * out_w; }
  std::size_t col_rows() const { return static_cast<std::size_t>(in_c) * taps(); }
};

std::shared_ptr<ConvGeometry> conv_geometry(const Shape& x, const Shape& w, const ConvOptions& opt) {
  if (opt.mode_h == PadMode::wrap) {
    fail(ErrorCode::invalid_argument, "conv2d: wrap padding is only supported on the width (theta) axis");
  }
  require(x.c() == w.c(), fmt::format("conv2d: input channels {} do not match weight {}", x.c(), w.to_string()));
  if (opt.stride < 1 || opt.dilation < 1) fail(ErrorCode::invalid_argument, "conv2d: stride and dilation must be >= 1");
  auto geo = std::make_shared<ConvGeometry>();
  geo->in_c = x.c();
  geo->in_h = x.h();
  geo->in_w = x.w();
  geo->out_c = w.n();
  geo->k_h = w.h();
  geo->k_w = w.w();
  geo->out_h = (x.h() + 2 * opt.pad_h - opt.dilation * (w.h() - 1) - 1) / opt.stride + 1;
  geo->out_w = (x.w() + 2 * opt.pad_w - opt.dilation * (w.w() - 1) - 1) / opt.stride + 1;
  require(geo->out_h >= 1 && geo->out_w >= 1, "conv2d: output would be empty");
  geo->source.resize(geo->taps() * geo->out_plane());
  std::size_t r = 0;
  for (int kh = 0; kh < geo->k_h; ++kh) {
    for (int kw = 0; kw < geo->k_w; ++kw) {
      for (int oh = 0; oh < geo->out_h; ++oh) {
        const int ih = oh * opt.stride - opt.pad_h + kh * opt.dilation;
        for (int ow = 0; ow < geo->out_w; ++ow, ++r) {
          int iw = ow * opt.stride - opt.pad_w + kw * opt.dilation;
          if (opt.mode_w == PadMode::wrap) iw = positive_mod(iw, geo->in_w);
          const bool inside = ih >= 0 && ih < geo->in_h && iw >= 0 && iw < geo->in_w;
          geo->source[r] = inside ? ih * geo->in_w + iw : -1;
        }
      }
    }
  }
  return geo;
}

template <typename T>
void im2col(const ConvGeometry& geo, const T* item, T* cols) {
  const std::size_t block = geo.source.size();
  const std::size_t plane = static_cast<std::size_t>(geo.in_h) * geo.in_w;
  for (int ci = 0; ci < geo.in_c; ++ci) {
    const T* src = item + ci * plane;
    T* dst = cols + ci * block;
    for (std::size_t r = 0; r < block; ++r) {
      const int s = geo.source[r];
      dst[r] = s >= 0 ? src[s] : T(0);
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& geo, const T* cols, T* item) {
  const std::size_t block = geo.source.size();
  const std::size_t plane = static_cast<std::size_t>(geo.in_h) * geo.in_w;
  for (int ci = 0; ci < geo.in_c; ++ci) {
    const T* src = cols + ci * block;
    T* dst = item + ci * plane;
    for (std::size_t r = 0; r < block; ++r) {
      const int s = geo.source[r];
      if (s >= 0) dst[s] += src[r];
    }
  }
}

// Per-axis bilinear taps for align-corners-false doubling.
struct UpTaps {
  std::vector<int> i0, i1;
  std::vector<double> frac;
};

UpTaps up_taps(int in, bool wrap) {
  UpTaps t;
  const int out = 2 * in;
  t.i0.resize(out);
  t.i1.resize(out);
  t.frac.resize(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) / 2.0 - 0.5;
    if (wrap) {
      const double f = std::floor(src);
      t.i0[o] = positive_mod(static_cast<int>(f), in);
      t.i1[o] = positive_mod(static_cast<int>(f) + 1, in);
      t.frac[o] = src - f;
    } else {
      src = std::max(src, 0.0);
      const int lo = static_cast<int>(src);
      t.i0[o] = lo;
      t.i1[o] = std::min(lo + 1, in - 1);
      t.frac[o] = src - lo;
    }
  }
  return t;
}

}  // namespace

template <typename T>
Var conv2d(Graph<T>& g, Var x, Var weight, std::optional<Var> bias, const ConvOptions& opt) {
  const Shape xs = g.shape(x);
  const Shape ws = g.shape(weight);
  auto geo = conv_geometry(xs, ws, opt);
  if (bias) require(g.shape(*bias).numel() == static_cast<std::size_t>(ws.n()), "conv2d: bias length");
  const int n = xs.n();
  const std::size_t in_item = xs.item_size();
  const std::size_t out_plane = geo->out_plane();
  const std::size_t out_item = static_cast<std::size_t>(geo->out_c) * out_plane;
  std::vector<T> out(static_cast<std::size_t>(n) * out_item);
  const auto xv = g.value(x);
  const RowMat<T> wmat = owned(g.value(weight).data(), geo->out_c, geo->col_rows());
  const T* bv = bias ? g.value(*bias).data() : nullptr;

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t item) {
    RowMat<T> cols(geo->col_rows(), out_plane);
    im2col(*geo, xv.data() + item * in_item, cols.data());
    const RowMat<T> y = wmat * cols;
    T* dst = out.data() + item * out_item;
    std::copy(y.data(), y.data() + y.size(), dst);
    if (bv != nullptr) {
      for (int co = 0; co < geo->out_c; ++co) {
        for (std::size_t i = 0; i < out_plane; ++i) dst[co * out_plane + i] += bv[co];
      }
    }
  });

  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  const Var b = bias.value_or(Var{});
  return g.push(Shape::nchw(n, geo->out_c, geo->out_h, geo->out_w), std::move(out), inputs,
                [=](Graph<T>& gr, int self) {
                  const auto dy_all = gr.grad_view(Var{self});
                  const auto xval = gr.value(x);
                  const RowMat<T> w = owned(gr.value(weight).data(), geo->out_c, geo->col_rows());
                  const bool want_w = gr.needs_grad(weight);
                  const bool want_x = gr.needs_grad(x);
                  const bool want_b = b.valid() && gr.needs_grad(b);
                  std::vector<RowMat<T>> dw_parts(want_w ? n : 0);
                  std::vector<RowMat<T>> db_parts(want_b ? n : 0);
                  T* dx = want_x ? gr.grad(x).data() : nullptr;
                  parallel_for(static_cast<std::size_t>(n), [&](std::size_t item) {
                    const RowMat<T> dy = owned(dy_all.data() + item * out_item, geo->out_c, out_plane);
                    if (want_b) db_parts[item] = dy.rowwise().sum();
                    RowMat<T> cols(geo->col_rows(), out_plane);
                    if (want_w) {
                      im2col(*geo, xval.data() + item * in_item, cols.data());
                      dw_parts[item].noalias() = dy * cols.transpose();
                    }
                    if (want_x) {
                      cols.noalias() = w.transpose() * dy;
                      col2im_add(*geo, cols.data(), dx + item * in_item);
                    }
                  });
                  if (want_w) {
                    MatMap<T> dw(gr.grad(weight).data(), geo->out_c, geo->col_rows());
                    for (const auto& part : dw_parts) dw += part;
                  }
                  if (want_b) {
                    auto& db = gr.grad(b);
                    for (const auto& part : db_parts) {
                      for (int co = 0; co < geo->out_c; ++co) db[co] += part(co, 0);
                    }
                  }
                });
}

template <typename T>
Var upsample2x(Graph<T>& g, Var x, bool wrap_w) {
  const Shape s = g.shape(x);
  require(s.h() >= 1 && s.w() >= 1, "upsample2x: empty input");
  auto th = std::make_shared<UpTaps>(up_taps(s.h(), false));
  auto tw = std::make_shared<UpTaps>(up_taps(s.w(), wrap_w));
  const int oh = 2 * s.h();
  const int ow = 2 * s.w();
  const std::size_t planes = static_cast<std::size_t>(s.n()) * s.c();
  std::vector<T> out(planes * oh * ow);
  const auto xv = g.value(x);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = xv.data() + p * s.plane();
    T* dst = out.data() + p * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const T fy = static_cast<T>(th->frac[y]);
      const T* r0 = src + th->i0[y] * s.w();
      const T* r1 = src + th->i1[y] * s.w();
      for (int xo = 0; xo < ow; ++xo) {
        const T fx = static_cast<T>(tw->frac[xo]);
        const int a = tw->i0[xo];
        const int b = tw->i1[xo];
        const T top = (T(1) - fx) * r0[a] + fx * r0[b];
        const T bottom = (T(1) - fx) * r1[a] + fx * r1[b];
        dst[y * ow + xo] = (T(1) - fy) * top + fy * bottom;
      }
    }
  }
  const Var inputs[] = {x};
  return g.push(Shape::nchw(s.n(), s.c(), oh, ow), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    auto& dx = gr.grad(x);
    for (std::size_t p = 0; p < planes; ++p) {
      const T* src = dy.data() + p * oh * ow;
      T* dst = dx.data() + p * s.plane();
      for (int y = 0; y < oh; ++y) {
        const T fy = static_cast<T>(th->frac[y]);
        T* r0 = dst + th->i0[y] * s.w();
        T* r1 = dst + th->i1[y] * s.w();
        for (int xo = 0; xo < ow; ++xo) {
          const T fx = static_cast<T>(tw->frac[xo]);
          const T v = src[y * ow + xo];
          r0[tw->i0[xo]] += (T(1) - fy) * (T(1) - fx) * v;
          r0[tw->i1[xo]] += (T(1) - fy) * fx * v;
          r1[tw->i0[xo]] += fy * (T(1) - fx) * v;
          r1[tw->i1[xo]] += fy * fx * v;
        }
      }
    }
  });
}

template <typename T>
Var avg_pool2x(Graph<T>& g, Var x) {
  const Shape s = g.shape(x);
  require(s.h() % 2 == 0 && s.w() % 2 == 0, "avg_pool2x: H and W must be even, got " + s.to_string());
  const int oh = s.h() / 2;
  const int ow = s.w() / 2;
  const std::size_t planes = static_cast<std::size_t>(s.n()) * s.c();
  std::vector<T> out(planes * oh * ow);
  const auto xv = g.value(x);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = xv.data() + p * s.plane();
    for (int y = 0; y < oh; ++y) {
      for (int xo = 0; xo < ow; ++xo) {
        const T* r0 = src + (2 * y) * s.w() + 2 * xo;
        const T* r1 = r0 + s.w();
        out[(p * oh + y) * ow + xo] = T(0.25) * ((r0[0] + r0[1]) + (r1[0] + r1[1]));
      }
    }
  }
  const Var inputs[] = {x};
  return g.push(Shape::nchw(s.n(), s.c(), oh, ow), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    auto& dx = gr.grad(x);
    for (std::size_t p = 0; p < planes; ++p) {
      T* dst = dx.data() + p * s.plane();
      for (int y = 0; y < oh; ++y) {
        for (int xo = 0; xo < ow; ++xo) {
          const T v = T(0.25) * dy[(p * oh + y) * ow + xo];
          T* r0 = dst + (2 * y) * s.w() + 2 * xo;
          T* r1 = r0 + s.w();
          r0[0] += v;
          r0[1] += v;
          r1[0] += v;
          r1[1] += v;
        }
      }
    }
  });
}

template <typename T>
Var mean_over_width(Graph<T>& g, Var x) {
  const Shape s = g.shape(x);
  const std::size_t rows = static_cast<std::size_t>(s.n()) * s.c() * s.h();
  const int w = s.w();
  std::vector<T> out(rows);
  const auto xv = g.value(x);
  for (std::size_t r = 0; r < rows; ++r) {
    T acc = 0;
    for (int i = 0; i < w; ++i) acc += xv[r * w + i];
    out[r] = acc / static_cast<T>(w);
  }
  const Var inputs[] = {x};
  return g.push(Shape::nchw(s.n(), s.c(), s.h(), 1), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    auto& dx = gr.grad(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const T v = dy[r] / static_cast<T>(w);
      for (int i = 0; i < w; ++i) dx[r * w + i] += v;
    }
  });
}

template <typename T>
Var global_avg_pool(Graph<T>& g, Var x) {
  const Shape s = g.shape(x);
  const std::size_t planes = static_cast<std::size_t>(s.n()) * s.c();
  const std::size_t plane = s.plane();
  std::vector<T> out(planes);
  const auto xv = g.value(x);
  for (std::size_t p = 0; p < planes; ++p) {
    T acc = 0;
    for (std::size_t i = 0; i < plane; ++i) acc += xv[p * plane + i];
    out[p] = acc / static_cast<T>(plane);
  }
  const Var inputs[] = {x};
  return g.push(Shape::nchw(s.n(), s.c(), 1, 1), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    auto& dx = gr.grad(x);
    for (std::size_t p = 0; p < planes; ++p) {
      const T v = dy[p] / static_cast<T>(plane);
      for (std::size_t i = 0; i < plane; ++i) dx[p * plane + i] += v;
    }
  });
}

template <typename T>
Var linear(Graph<T>& g, Var x, Var weight, std::optional<Var> bias) {
  const Shape xs = g.shape(x);
  const Shape ws = g.shape(weight);
  const int n = xs.n();
  const int in = static_cast<int>(xs.item_size());
  const int out_f = ws.dims[0];
  require(static_cast<int>(ws.numel()) == out_f * in,
          fmt::format("linear: weight {} does not map {} inputs", ws.to_string(), in));
  if (bias) require(g.shape(*bias).numel() == static_cast<std::size_t>(out_f), "linear: bias length");
  std::vector<T> out(static_cast<std::size_t>(n) * out_f);
  const RowMat<T> xm = owned(g.value(x).data(), n, in);
  const RowMat<T> wm = owned(g.value(weight).data(), out_f, in);
  MatMap<T> ym(out.data(), n, out_f);
  ym = RowMat<T>(xm * wm.transpose());
  if (bias) {
    const auto bv = g.value(*bias);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < out_f; ++c) ym(r, c) += bv[c];
    }
  }
  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  const Var b = bias.value_or(Var{});
  return g.push(Shape::nchw(n, out_f, 1, 1), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const RowMat<T> dy = owned(gr.grad_view(Var{self}).data(), n, out_f);
    if (gr.needs_grad(weight)) {
      MatMap<T> dw(gr.grad(weight).data(), out_f, in);
      dw += RowMat<T>(dy.transpose() * owned(gr.value(x).data(), n, in));
    }
    if (gr.needs_grad(x)) {
      MatMap<T> dx(gr.grad(x).data(), n, in);
      dx += RowMat<T>(dy * owned(gr.value(weight).data(), out_f, in));
    }
    if (b.valid() && gr.needs_grad(b)) {
      auto& db = gr.grad(b);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < out_f; ++c) db[c] += dy(r, c);
      }
    }
  });
}

template <typename T>
Var instance_norm(Graph<T>& g, Var x, Var gain, Var shift, double eps) {
  const Shape s = g.shape(x);
  const std::size_t plane = s.plane();
  if (plane < 2) fail(ErrorCode::invalid_argument, "instance_norm: planes need at least 2 elements");
  require(g.shape(gain).numel() == static_cast<std::size_t>(s.c()) &&
              g.shape(shift).numel() == static_cast<std::size_t>(s.c()),
          "instance_norm: gain/shift length must equal channels");
  const std::size_t planes = static_cast<std::size_t>(s.n()) * s.c();
  auto xhat = std::make_shared<std::vector<T>>(s.numel());
  auto inv_std = std::make_shared<std::vector<T>>(planes);
  std::vector<T> out(s.numel());
  const auto xv = g.value(x);
  const auto gv = g.value(gain);
  const auto sv = g.value(shift);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = xv.data() + p * plane;
    T mean = 0;
    for (std::size_t i = 0; i < plane; ++i) mean += src[i];
    mean /= static_cast<T>(plane);
    T var = 0;
    for (std::size_t i = 0; i < plane; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<T>(plane);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
    (*inv_std)[p] = inv;
    const int c = static_cast<int>(p % s.c());
    for (std::size_t i = 0; i < plane; ++i) {
      const T h = (src[i] - mean) * inv;
      (*xhat)[p * plane + i] = h;
      out[p * plane + i] = gv[c] * h + sv[c];
    }
  }
  const Var inputs[] = {x, gain, shift};
  return g.push(s, std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    const auto gval = gr.value(gain);
    const bool want_x = gr.needs_grad(x);
    const bool want_gain = gr.needs_grad(gain);
    const bool want_shift = gr.needs_grad(shift);
    T* dx = want_x ? gr.grad(x).data() : nullptr;
    T* dgain = want_gain ? gr.grad(gain).data() : nullptr;
    T* dshift = want_shift ? gr.grad(shift).data() : nullptr;
    const T count = static_cast<T>(plane);
    for (std::size_t p = 0; p < planes; ++p) {
      const int c = static_cast<int>(p % s.c());
      const T* h = xhat->data() + p * plane;
      const T* d = dy.data() + p * plane;
      T sum_d = 0, sum_dh = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_d += d[i];
        sum_dh += d[i] * h[i];
      }
      if (dgain) dgain[c] += sum_dh;
      if (dshift) dshift[c] += sum_d;
      if (dx) {
        const T k = gval[c] * (*inv_std)[p] / count;
        for (std::size_t i = 0; i < plane; ++i) {
          dx[p * plane + i] += k * (count * d[i] - sum_d - h[i] * sum_dh);
        }
      }
    }
  });
}

template <typename T>
Var activation(Graph<T>& g, Activation kind, Var x) {
  const auto xv = g.value(x);
  std::vector<T> out(xv.size());
  const T slope = static_cast<T>(kLeakySlope);
  const T tanh_bound = std::nextafter(T(1), T(0));
  switch (kind) {
    case Activation::leaky_relu:
      g.note_kinks(xv);
      for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] >= T(0) ? xv[i] : slope * xv[i];
      break;
    case Activation::relu:
      g.note_kinks(xv);
      for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] >= T(0) ? xv[i] : T(0);
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::clamp(std::tanh(xv[i]), -tanh_bound, tanh_bound);
      break;
  }
  const Var inputs[] = {x};
  return g.push(g.shape(x), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    const auto in = gr.value(x);
    const auto y = gr.value(Var{self});
    auto& dx = gr.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      T d = T(1);
      switch (kind) {
        case Activation::leaky_relu: d = in[i] >= T(0) ? T(1) : slope; break;
        case Activation::relu: d = in[i] >= T(0) ? T(1) : T(0); break;
        case Activation::tanh: d = T(1) - y[i] * y[i]; break;
      }
      dx[i] += d * dy[i];
    }
  });
}

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  require_same_shape(g, a, b, "add");
  const auto av = g.value(a);
  const auto bv = g.value(b);
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const Var inputs[] = {a, b};
  return g.push(g.shape(a), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    for (Var v : {a, b}) {
      if (!gr.needs_grad(v)) continue;
      auto& d = gr.grad(v);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
    }
  });
}

template <typename T>
Var sub(Graph<T>& g, Var a, Var b) {
  require_same_shape(g, a, b, "sub");
  const auto av = g.value(a);
  const auto bv = g.value(b);
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const Var inputs[] = {a, b};
  return g.push(g.shape(a), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    if (gr.needs_grad(a)) {
      auto& d = gr.grad(a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
    }
    if (gr.needs_grad(b)) {
      auto& d = gr.grad(b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= dy[i];
    }
  });
}

template <typename T>
Var mul(Graph<T>& g, Var a, Var b) {
  require_same_shape(g, a, b, "mul");
  const auto av = g.value(a);
  const auto bv = g.value(b);
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const Var inputs[] = {a, b};
  return g.push(g.shape(a), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    const auto av2 = gr.value(a);
    const auto bv2 = gr.value(b);
    if (gr.needs_grad(a)) {
      auto& d = gr.grad(a);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * bv2[i];
    }
    if (gr.needs_grad(b)) {
      auto& d = gr.grad(b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i] * av2[i];
    }
  });
}

template <typename T>
Var scale(Graph<T>& g, Var a, double factor) {
  const auto av = g.value(a);
  const T f = static_cast<T>(factor);
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f * av[i];
  const Var inputs[] = {a};
  return g.push(g.shape(a), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    auto& d = gr.grad(a);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += f * dy[i];
  });
}

template <typename T>
Var add_scalar(Graph<T>& g, Var a, double c) {
  const auto av = g.value(a);
  const T k = static_cast<T>(c);
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + k;
  const Var inputs[] = {a};
  return g.push(g.shape(a), std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    auto& d = gr.grad(a);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += dy[i];
  });
}

template <typename T>
Var concat_channels(Graph<T>& g, std::span<const Var> parts) {
  require(!parts.empty(), "concat_channels: no inputs");
  const Shape first = g.shape(parts[0]);
  int channels = 0;
  for (Var p : parts) {
    const Shape s = g.shape(p);
    require(s.n() == first.n() && s.h() == first.h() && s.w() == first.w(),
            "concat_channels: batch/spatial dims differ");
    channels += s.c();
  }
  const Shape out_shape = Shape::nchw(first.n(), channels, first.h(), first.w());
  const std::size_t plane = first.plane();
  std::vector<T> out(out_shape.numel());
  std::vector<Var> inputs(parts.begin(), parts.end());
  for (int item = 0; item < first.n(); ++item) {
    std::size_t offset = static_cast<std::size_t>(item) * channels * plane;
    for (Var p : inputs) {
      const std::size_t len = static_cast<std::size_t>(g.shape(p).c()) * plane;
      const auto v = g.value(p);
      std::copy_n(v.data() + item * len, len, out.data() + offset);
      offset += len;
    }
  }
  return g.push(out_shape, std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    for (int item = 0; item < first.n(); ++item) {
      std::size_t offset = static_cast<std::size_t>(item) * channels * plane;
      for (Var p : inputs) {
        const std::size_t len = static_cast<std::size_t>(gr.shape(p).c()) * plane;
        if (gr.needs_grad(p)) {
          auto& d = gr.grad(p);
          for (std::size_t i = 0; i < len; ++i) d[item * len + i] += dy[offset + i];
        }
        offset += len;
      }
    }
  });
}

template <typename T>
Var select(Graph<T>& g, Var mask, Var when_one, Var when_zero) {
  require_same_shape(g, when_one, when_zero, "select");
  const Shape s = g.shape(when_one);
  const Shape ms = g.shape(mask);
  require(ms.n() == s.n() && ms.c() == 1 && ms.h() == s.h() && ms.w() == s.w(),
          "select: mask must be (N, 1, H, W) matching the operands");
  const auto mv = g.value(mask);
  const auto a = g.value(when_one);
  const auto b = g.value(when_zero);
  const std::size_t plane = s.plane();
  std::vector<T> out(s.numel());
  for (int item = 0; item < s.n(); ++item) {
    for (int c = 0; c < s.c(); ++c) {
      const std::size_t base = (static_cast<std::size_t>(item) * s.c() + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        out[base + i] = mv[item * plane + i] >= T(0.5) ? a[base + i] : b[base + i];
      }
    }
  }
  const Var inputs[] = {when_one, when_zero};
  return g.push(s, std::move(out), inputs, [=](Graph<T>& gr, int self) {
    const auto dy = gr.grad_view(Var{self});
    const auto m = gr.value(mask);
    const bool want_a = gr.needs_grad(when_one);
    const bool want_b = gr.needs_grad(when_zero);
    T* da = want_a ? gr.grad(when_one).data() : nullptr;
    T* db = want_b ? gr.grad(when_zero).data() : nullptr;
    for (int item = 0; item < s.n(); ++item) {
      for (int c = 0; c < s.c(); ++c) {
        const std::size_t base = (static_cast<std::size_t>(item) * s.c() + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const bool one = m[item * plane + i] >= T(0.5);
          if (one && da) da[base + i] += dy[base + i];
          if (!one && db) db[base + i] += dy[base + i];
        }
      }
    }
  });
}

template <typename T>
Var sum(Graph<T>& g, Var x) {
  T acc = 0;
  for (T v : g.value(x)) acc += v;
  const Var inputs[] = {x};
  return g.push(Shape::scalar(), {acc}, inputs, [=](Graph<T>& gr, int self) {
    const T dy = gr.grad_view(Var{self})[0];
    for (T& d : gr.grad(x)) d += dy;
  });
}

template <typename T>
Var mean(Graph<T>& g, Var x) {
  const std::size_t n = g.value(x).size();
  T acc = 0;
  for (T v : g.value(x)) acc += v;
  const Var inputs[] = {x};
  return g.push(Shape::scalar(), {acc / static_cast<T>(n)}, inputs, [=](Graph<T>& gr, int self) {
    const T dy = gr.grad_view(Var{self})[0] / static_cast<T>(n);
    for (T& d : gr.grad(x)) d += dy;
  });
}

template <typename T>
Var masked_mse(Graph<T>& g, Var pred, Var target, Var weight) {
  require_same_shape(g, pred, target, "masked_mse");
  const Shape s = g.shape(pred);
  const Shape ws = g.shape(weight);
  require(ws.n() == s.n() && ws.c() == 1 && ws.h() == s.h() && ws.w() == s.w(),
          "masked_mse: weight must be (N, 1, H, W)");
  const std::size_t plane = s.plane();
  const auto p = g.value(pred);
  const auto t = g.value(target);
  const auto w = g.value(weight);
  double wsum = 0.0;
  for (T v : w) wsum += v;
  const double denom = wsum * s.c();
  double acc = 0.0;
  for (int item = 0; item < s.n(); ++item) {
    for (int c = 0; c < s.c(); ++c) {
      const std::size_t base = (static_cast<std::size_t>(item) * s.c() + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = static_cast<double>(p[base + i]) - t[base + i];
        acc += w[item * plane + i] * d * d;
      }
    }
  }
  const T value = denom > 0.0 ? static_cast<T>(acc / denom) : T(0);
  const Var inputs[] = {pred, target};
  return g.push(Shape::scalar(), {value}, inputs, [=](Graph<T>& gr, int self) {
    if (!(denom > 0.0)) return;
    const T k = static_cast<T>(2.0 / denom) * gr.grad_view(Var{self})[0];
    const auto pv = gr.value(pred);
    const auto tv = gr.value(target);
    const auto wv = gr.value(weight);
    const bool want_p = gr.needs_grad(pred);
    const bool want_t = gr.needs_grad(target);
    T* dp = want_p ? gr.grad(pred).data() : nullptr;
    T* dt = want_t ? gr.grad(target).data() : nullptr;
    for (int item = 0; item < s.n(); ++item) {
      for (int c = 0; c < s.c(); ++c) {
        const std::size_t base = (static_cast<std::size_t>(item) * s.c() + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const T d = k * wv[item * plane + i] * (pv[base + i] - tv[base + i]);
          if (dp) dp[base + i] += d;
          if (dt) dt[base + i] -= d;
        }
      }
    }
  });
}

template <typename T>
Var l1_mean(Graph<T>& g, Var pred, Var target) {
  require_same_shape(g, pred, target, "l1_mean");
  const auto p = g.value(pred);
  const auto t = g.value(target);
  const std::size_t n = p.size();
  std::vector<T> diff(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = p[i] - t[i];
    acc += std::abs(static_cast<double>(p[i]) - t[i]);
  }
  g.note_kinks(diff);
  const Var inputs[] = {pred, target};
  return g.push(Shape::scalar(), {static_cast<T>(acc / n)}, inputs, [=](Graph<T>& gr, int self) {
    const T k = gr.grad_view(Var{self})[0] / static_cast<T>(n);
    const auto pv = gr.value(pred);
    const auto tv = gr.value(target);
    const bool want_p = gr.needs_grad(pred);
    const bool want_t = gr.needs_grad(target);
    T* dp = want_p ? gr.grad(pred).data() : nullptr;
    T* dt = want_t ? gr.grad(target).data() : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const T d = pv[i] > tv[i] ? k : pv[i] < tv[i] ? -k : T(0);
      if (dp) dp[i] += d;
      if (dt) dt[i] -= d;
    }
  });
}

template <typename T>
Var weighted_sum(Graph<T>& g, std::span<const Var> scalars, std::span<const double> weights) {
  require(scalars.size() == weights.size() && !scalars.empty(), "weighted_sum: mismatched inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    require(g.value(scalars[i]).size() == 1, "weighted_sum: inputs must be scalars");
    acc += weights[i] * static_cast<double>(g.item(scalars[i]));
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return g.push(Shape::scalar(), {static_cast<T>(acc)}, inputs, [=](Graph<T>& gr, int self) {
    const T dy = gr.grad_view(Var{self})[0];
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (gr.needs_grad(inputs[i])) gr.grad(inputs[i])[0] += static_cast<T>(w[i]) * dy;
    }
  });
}

#define FISHEYEX_INSTANTIATE_OPS(T)                                                                 \
  template Var conv2d<T>(Graph<T>&, Var, Var, std::optional<Var>, const ConvOptions&);             \
  template Var upsample2x<T>(Graph<T>&, Var, bool);                                                 \
  template Var avg_pool2x<T>(Graph<T>&, Var);                                                       \
  template Var mean_over_width<T>(Graph<T>&, Var);                                                  \
  template Var global_avg_pool<T>(Graph<T>&, Var);                                                  \
  template Var linear<T>(Graph<T>&, Var, Var, std::optional<Var>);                                  \
  template Var instance_norm<T>(Graph<T>&, Var, Var, Var, double);                                  \
  template Var activation<T>(Graph<T>&, Activation, Var);                                           \
  template Var add<T>(Graph<T>&, Var, Var);                                                         \
  template Var sub<T>(Graph<T>&, Var, Var);                                                         \
  template Var mul<T>(Graph<T>&, Var, Var);                                                         \
  template Var scale<T>(Graph<T>&, Var, double);                                                    \
  template Var add_scalar<T>(Graph<T>&, Var, double);                                               \
  template Var concat_channels<T>(Graph<T>&, std::span<const Var>);                                 \
  template Var select<T>(Graph<T>&, Var, Var, Var);                                                 \
  template Var sum<T>(Graph<T>&, Var);                                                              \
  template Var mean<T>(Graph<T>&, Var);                                                             \
  template Var masked_mse<T>(Graph<T>&, Var, Var, Var);                                             \
  template Var l1_mean<T>(Graph<T>&, Var, Var);                                                     \
  template Var weighted_sum<T>(Graph<T>&, std::span<const Var>, std::span<const double>);

FISHEYEX_INSTANTIATE_OPS(float)
FISHEYEX_INSTANTIATE_OPS(double)

}  // namespace fisheyex::ad
