#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "fisheyex/ad/graph.hpp"

namespace fisheyex::ad {

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates probed per tensor; tensors this small or smaller are checked fully.
  std::size_t max_coords_per_tensor = 24;
  /// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-3;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +-step evaluations changed the kink sign pattern.
  std::size_t excluded = 0;
  std::string worst;
};

/// Central-difference check of d(build)/d(params) in 64-bit. `build` must
/// construct the same scalar graph deterministically from the current
/// parameter values. Throws non_finite on NaN/inf.
GradCheckReport grad_check(const std::function<Var(Graph<double>&)>& build,
                           ParamStore<double>& params, const GradCheckOptions& options = {});

}  // namespace fisheyex::ad
