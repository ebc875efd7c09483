#include "fisheyex/ad/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "fisheyex/error.hpp"
#include "fisheyex/rng.hpp"

namespace fisheyex::ad {

namespace {

struct Evaluation {
  double value;
  std::uint64_t signature;
};

Evaluation evaluate(const std::function<Var(Graph<double>&)>& build) {
  Graph<double> g;
  g.track_kinks(true);
  const Var root = build(g);
  const double v = g.item(root);
  if (!std::isfinite(v)) fail(ErrorCode::non_finite, "gradient check: loss is not finite");
  return {v, g.kink_signature()};
}

std::vector<std::size_t> pick_coords(std::size_t n, std::size_t limit, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= limit) return idx;
  for (std::size_t i = 0; i < limit; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport grad_check(const std::function<Var(Graph<double>&)>& build, ParamStore<double>& params,
                           const GradCheckOptions& options) {
  params.zero_grad();
  std::uint64_t base_signature = 0;
  {
    Graph<double> g;
    g.track_kinks(true);
    const Var root = build(g);
    if (!std::isfinite(g.item(root))) fail(ErrorCode::non_finite, "gradient check: loss is not finite");
    base_signature = g.kink_signature();
    g.backward(root);
  }

  GradCheckReport report;
  Rng rng(options.seed);
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor<double>& p = params.at(t);
    if (!p.requires_grad) continue;
    const std::vector<double> analytic = p.grad.empty() ? std::vector<double>(p.numel(), 0.0) : p.grad;
    for (std::size_t k : pick_coords(p.numel(), options.max_coords_per_tensor, rng)) {
      const double saved = p.data[k];
      p.data[k] = saved + options.step;
      const Evaluation plus = evaluate(build);
      p.data[k] = saved - options.step;
      const Evaluation minus = evaluate(build);
      p.data[k] = saved;
      if (plus.signature != base_signature || minus.signature != base_signature) {
        ++report.excluded;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * options.step);
      const double a = analytic[k];
      if (!std::isfinite(a)) fail(ErrorCode::non_finite, "gradient check: analytic gradient is not finite");
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
      ++report.checked;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = fmt::format("{}[{}] analytic {:.6e} numeric {:.6e}", params.name(t), k, a, numeric);
      }
    }
  }
  params.zero_grad();
  return report;
}

}  // namespace fisheyex::ad
