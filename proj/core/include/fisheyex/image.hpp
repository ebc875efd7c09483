#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fisheyex {

/// Declared value interval of a buffer. `unbounded` holds raw float fields
/// (distortion-level maps, tensor-file payloads) and is never clamped.
enum class ValueRange { unit, signed_unit, unbounded };

float range_min(ValueRange range);
float range_max(ValueRange range);
/// Width of the interval (1 for unit, 2 for signed); used as PSNR peak.
float range_width(ValueRange range);

enum class BorderPolicy { zero_fill, edge_clamp };

/// Dense row-major H x W x C float raster. Pixel (x, y) has its center at the
/// continuous coordinate (x, y).
class ImageBuffer {
 public:
  ImageBuffer() = default;
  /// Zero-filled buffer.
  ImageBuffer(int height, int width, int channels, ValueRange range = ValueRange::unit);
  /// Takes ownership of `data`; values outside `range` are clamped.
  ImageBuffer(int height, int width, int channels, std::vector<float> data,
              ValueRange range = ValueRange::unit);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  ValueRange range() const noexcept { return range_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const float> data() const noexcept { return data_; }
  /// Mutable view; writers are responsible for staying inside range().
  std::span<float> data() noexcept { return data_; }

  std::size_t index(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  float at(int y, int x, int c = 0) const noexcept { return data_[index(y, x, c)]; }
  float& at(int y, int x, int c = 0) noexcept { return data_[index(y, x, c)]; }

  /// Stores v clamped to range().
  void set(int y, int x, int c, float v) noexcept;
  void clamp_to_range() noexcept;

  /// Same pixels re-tagged into `range` by the affine map between intervals.
  /// Unbounded sources are clamped into the target.
  ImageBuffer converted(ValueRange range) const;
  /// Copies a 1-channel image into 3 identical channels.
  ImageBuffer broadcast_to_rgb() const;

  bool operator==(const ImageBuffer& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  ValueRange range_ = ValueRange::unit;
  std::vector<float> data_;
};

/// Binary raster, 1 = region to fill (invalid), 0 = valid content.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width, float fill = 0.0f);
  /// Values are thresholded at 0.5 into {0, 1}.
  Mask(int height, int width, std::vector<float> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const float> data() const noexcept { return data_; }

  float at(int y, int x) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int y, int x, bool fill) noexcept {
    data_[static_cast<std::size_t>(y) * width_ + x] = fill ? 1.0f : 0.0f;
  }
  std::size_t count_ones() const noexcept;
  /// 1 where this mask is 0 and vice versa.
  Mask complement() const;

  ImageBuffer to_image() const;
  /// Thresholds channel 0 of `img` at 0.5.
  static Mask from_image(const ImageBuffer& img);

  bool operator==(const Mask& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Bilinear sample of channel `c` at continuous position (x, y). Exact at
/// integer coordinates inside the raster.
float sample_bilinear(const ImageBuffer& img, double x, double y, int c, BorderPolicy policy);

/// All channels at once; `out` must hold img.channels() values.
void sample_bilinear(const ImageBuffer& img, double x, double y, BorderPolicy policy,
                     std::span<float> out);

/// Align-corners-false resize: output center (i + 0.5) maps to input
/// (i + 0.5) * in / out - 0.5, sampled with edge clamping.
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_height, int out_width);

/// Center crop to the target aspect ratio, then resize.
ImageBuffer center_crop_resize(const ImageBuffer& img, int out_height, int out_width);

/// Rounds every value to the nearest multiple of 1/255 (what a PNG round trip stores).
ImageBuffer quantize_8bit(const ImageBuffer& img);

}  // namespace fisheyex
