#pragma once

#include <span>
#include <vector>

#include "fisheyex/ad/tensor.hpp"
#include "fisheyex/distortion.hpp"
#include "fisheyex/image.hpp"

namespace fisheyex::nn {

/// Stacks HWC images of equal size into an (N, C, H, W) tensor, values as stored.
template <typename T>
ad::Tensor<T> stack_images(std::span<const ImageBuffer* const> images);

template <typename T>
ad::Tensor<T> stack_masks(std::span<const Mask* const> masks);

/// (N, n_rho, 1, 1) from level vectors of equal length.
template <typename T>
ad::Tensor<T> stack_levels(std::span<const DistortionLevelVector* const> levels);

/// Batch item `item` of an (N, C, H, W) value array as an HWC image; values
/// are clamped into `range`.
template <typename T>
ImageBuffer unstack_image(std::span<const T> values, const ad::Shape& shape, int item, ValueRange range);

}  // namespace fisheyex::nn
