#include "fisheyex/nn/layers.hpp"

#include <cmath>

namespace fisheyex::nn {

void LayerFactory::fill_uniform(std::size_t index, double bound) {
  Rng rng(mix_seed(seed_, index));
  for (float& v : store_.at(index).data) v = static_cast<float>(rng.uniform(-bound, bound));
}

ConvLayer LayerFactory::conv(const std::string& name, int in, int out, int kernel, int stride, int dilation,
                             bool wrap_w, double gain) {
  ConvLayer layer{0, 0, kernel, stride, dilation, wrap_w};
  layer.weight = store_.add(name + ".w", ad::Shape::nchw(out, in, kernel, kernel));
  layer.bias = store_.add(name + ".b", ad::Shape::vector(out));
  fill_uniform(layer.weight, gain * std::sqrt(3.0 / (in * kernel * kernel)));
  return layer;
}

DenseLayer LayerFactory::dense(const std::string& name, int in, int out, double gain, bool zero_weights,
                               float bias_value) {
  DenseLayer layer;
  layer.weight = store_.add(name + ".w", ad::Shape::matrix(out, in));
  layer.bias = store_.add(name + ".b", ad::Shape::vector(out));
  if (!zero_weights) fill_uniform(layer.weight, gain * std::sqrt(3.0 / in));
  for (float& v : store_.at(layer.bias).data) v = bias_value;
  return layer;
}

NormLayer LayerFactory::norm(const std::string& name, int channels) {
  NormLayer layer;
  layer.gain = store_.add(name + ".gain", ad::Shape::vector(channels));
  layer.shift = store_.add(name + ".shift", ad::Shape::vector(channels));
  for (float& v : store_.at(layer.gain).data) v = 1.0f;
  return layer;
}

template <typename T>
ad::Var apply(ad::Graph<T>& g, ad::ParamStore<T>& p, const ConvLayer& layer, ad::Var x) {
  return ad::conv2d(g, x, g.parameter(p.at(layer.weight)), g.parameter(p.at(layer.bias)),
                    ad::ConvOptions::same(layer.kernel, layer.stride, layer.dilation, layer.wrap_w));
}

template <typename T>
ad::Var apply(ad::Graph<T>& g, ad::ParamStore<T>& p, const DenseLayer& layer, ad::Var x) {
  return ad::linear(g, x, g.parameter(p.at(layer.weight)), g.parameter(p.at(layer.bias)));
}

template <typename T>
ad::Var apply(ad::Graph<T>& g, ad::ParamStore<T>& p, const NormLayer& layer, ad::Var x) {
  return ad::instance_norm(g, x, g.parameter(p.at(layer.gain)), g.parameter(p.at(layer.shift)));
}

template ad::Var apply(ad::Graph<float>&, ad::ParamStore<float>&, const ConvLayer&, ad::Var);
template ad::Var apply(ad::Graph<double>&, ad::ParamStore<double>&, const ConvLayer&, ad::Var);
template ad::Var apply(ad::Graph<float>&, ad::ParamStore<float>&, const DenseLayer&, ad::Var);
template ad::Var apply(ad::Graph<double>&, ad::ParamStore<double>&, const DenseLayer&, ad::Var);
template ad::Var apply(ad::Graph<float>&, ad::ParamStore<float>&, const NormLayer&, ad::Var);
template ad::Var apply(ad::Graph<double>&, ad::ParamStore<double>&, const NormLayer&, ad::Var);

}  // namespace fisheyex::nn
