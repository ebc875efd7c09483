#include "fisheyex/nn/convert.hpp"

#include "fisheyex/error.hpp"

namespace fisheyex::nn {

template <typename T>
ad::Tensor<T> stack_images(std::span<const ImageBuffer* const> images) {
  if (images.empty()) fail(ErrorCode::invalid_argument, "cannot stack an empty batch");
  const int h = images[0]->height();
  const int w = images[0]->width();
  const int c = images[0]->channels();
  ad::Tensor<T> out(ad::Shape::nchw(static_cast<int>(images.size()), c, h, w));
  std::size_t i = 0;
  for (const ImageBuffer* img : images) {
    if (img->height() != h || img->width() != w || img->channels() != c) {
      fail(ErrorCode::shape_mismatch, "batch images differ in dimensions");
    }
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.data[i++] = static_cast<T>(img->at(y, x, ch));
      }
    }
  }
  return out;
}

template <typename T>
ad::Tensor<T> stack_masks(std::span<const Mask* const> masks) {
  if (masks.empty()) fail(ErrorCode::invalid_argument, "cannot stack an empty batch");
  const int h = masks[0]->height();
  const int w = masks[0]->width();
  ad::Tensor<T> out(ad::Shape::nchw(static_cast<int>(masks.size()), 1, h, w));
  std::size_t i = 0;
  for (const Mask* m : masks) {
    if (m->height() != h || m->width() != w) fail(ErrorCode::shape_mismatch, "batch masks differ in dimensions");
    for (float v : m->data()) out.data[i++] = static_cast<T>(v);
  }
  return out;
}

template <typename T>
ad::Tensor<T> stack_levels(std::span<const DistortionLevelVector* const> levels) {
  if (levels.empty()) fail(ErrorCode::invalid_argument, "cannot stack an empty batch");
  const std::size_t n = levels[0]->size();
  ad::Tensor<T> out(ad::Shape::nchw(static_cast<int>(levels.size()), static_cast<int>(n), 1, 1));
  std::size_t i = 0;
  for (const DistortionLevelVector* v : levels) {
    if (v->size() != n) fail(ErrorCode::shape_mismatch, "batch level vectors differ in length");
    for (float x : v->values) out.data[i++] = static_cast<T>(x);
  }
  return out;
}

template <typename T>
ImageBuffer unstack_image(std::span<const T> values, const ad::Shape& shape, int item, ValueRange range) {
  if (item < 0 || item >= shape.n() || values.size() != shape.numel()) {
    fail(ErrorCode::shape_mismatch, "unstack: item or value count does not match the shape");
  }
  ImageBuffer img(shape.h(), shape.w(), shape.c(), range);
  std::size_t i = static_cast<std::size_t>(item) * shape.item_size();
  for (int ch = 0; ch < shape.c(); ++ch) {
    for (int y = 0; y < shape.h(); ++y) {
      for (int x = 0; x < shape.w(); ++x) img.at(y, x, ch) = static_cast<float>(values[i++]);
    }
  }
  img.clamp_to_range();
  return img;
}

#define FISHEYEX_INSTANTIATE_CONVERT(T)                                                            \
  template ad::Tensor<T> stack_images(std::span<const ImageBuffer* const>);                       \
  template ad::Tensor<T> stack_masks(std::span<const Mask* const>);                               \
  template ad::Tensor<T> stack_levels(std::span<const DistortionLevelVector* const>);             \
  template ImageBuffer unstack_image(std::span<const T>, const ad::Shape&, int, ValueRange);

FISHEYEX_INSTANTIATE_CONVERT(float)
FISHEYEX_INSTANTIATE_CONVERT(double)

}  // namespace fisheyex::nn
