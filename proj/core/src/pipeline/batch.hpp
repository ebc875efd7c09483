#pragma once

// Helpers shared by the training loops: channel-major sample storage and
// batch assembly.

#include <span>
#include <vector>

#include "fisheyex/ad/tensor.hpp"
#include "fisheyex/error.hpp"
#include "fisheyex/image.hpp"
#include "fisheyex/rng.hpp"

namespace fisheyex::pipeline::detail {

/// One sample raster in (C, H, W) order.
struct Planar {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;
};

/// Unit-range image to channel-major, optionally mapped to [-1, 1].
inline Planar to_planar(const ImageBuffer& img, bool to_signed) {
  Planar p{img.channels(), img.height(), img.width(), {}};
  p.v.resize(img.size());
  std::size_t i = 0;
  for (int ch = 0; ch < p.c; ++ch) {
    for (int y = 0; y < p.h; ++y) {
      for (int x = 0; x < p.w; ++x) {
        const float v = img.at(y, x, ch);
        p.v[i++] = to_signed ? 2.0f * v - 1.0f : v;
      }
    }
  }
  return p;
}

inline Planar to_planar(const Mask& m) {
  Planar p{1, m.height(), m.width(), {m.data().begin(), m.data().end()}};
  return p;
}

/// 1 where `include` is 1 and `exclude` is 0.
inline Planar weight_planar(const Mask& include, const Mask& exclude) {
  Planar p = to_planar(include);
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    if (exclude.data()[i] != 0.0f) p.v[i] = 0.0f;
  }
  return p;
}

inline Planar ones_planar(int h, int w) { return Planar{1, h, w, std::vector<float>(static_cast<std::size_t>(h) * w, 1.0f)}; }

/// Stacks the selected items into one (N, C, H, W) tensor.
inline ad::Tensor<float> stack(const std::vector<Planar>& items, std::span<const std::size_t> pick) {
  const Planar& first = items.at(pick[0]);
  ad::Tensor<float> t(ad::Shape::nchw(static_cast<int>(pick.size()), first.c, first.h, first.w));
  std::size_t offset = 0;
  for (std::size_t k : pick) {
    const Planar& p = items.at(k);
    if (p.v.size() != first.v.size()) fail(ErrorCode::shape_mismatch, "batch items differ in shape");
    std::copy(p.v.begin(), p.v.end(), t.data.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.v.size();
  }
  return t;
}

/// `batch` draws with replacement from [0, n).
inline std::vector<std::size_t> draw_batch(Rng& rng, std::size_t n, int batch) {
  std::vector<std::size_t> out(static_cast<std::size_t>(batch));
  for (std::size_t& i : out) i = rng.below(n);
  return out;
}

}  // namespace fisheyex::pipeline::detail
