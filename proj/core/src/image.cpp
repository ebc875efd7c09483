#include "fisheyex/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fisheyex/error.hpp"

namespace fisheyex {

float range_min(ValueRange range) {
  switch (range) {
    case ValueRange::unit: return 0.0f;
    case ValueRange::signed_unit: return -1.0f;
    case ValueRange::unbounded: return -std::numeric_limits<float>::infinity();
  }
  return 0.0f;
}

float range_max(ValueRange range) {
  switch (range) {
    case ValueRange::unit:
    case ValueRange::signed_unit: return 1.0f;
    case ValueRange::unbounded: return std::numeric_limits<float>::infinity();
  }
  return 1.0f;
}

float range_width(ValueRange range) {
  switch (range) {
    case ValueRange::unit: return 1.0f;
    case ValueRange::signed_unit: return 2.0f;
    case ValueRange::unbounded: return 1.0f;
  }
  return 1.0f;
}

namespace {

void check_dims(int height, int width, int channels) {
  if (height < 0 || width < 0 || channels < 0) fail(ErrorCode::invalid_argument, "negative image dimension");
}

}  // namespace

ImageBuffer::ImageBuffer(int height, int width, int channels, ValueRange range)
    : height_(height), width_(width), channels_(channels), range_(range) {
  check_dims(height, width, channels);
  data_.assign(static_cast<std::size_t>(height) * width * channels, 0.0f);
}

ImageBuffer::ImageBuffer(int height, int width, int channels, std::vector<float> data, ValueRange range)
    : height_(height), width_(width), channels_(channels), range_(range), data_(std::move(data)) {
  check_dims(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    fail(ErrorCode::shape_mismatch, "image data length does not equal H*W*C");
  }
  clamp_to_range();
}

void ImageBuffer::set(int y, int x, int c, float v) noexcept {
  data_[index(y, x, c)] = std::clamp(v, range_min(range_), range_max(range_));
}

void ImageBuffer::clamp_to_range() noexcept {
  if (range_ == ValueRange::unbounded) return;
  const float lo = range_min(range_);
  const float hi = range_max(range_);
  for (float& v : data_) v = std::clamp(v, lo, hi);
}

ImageBuffer ImageBuffer::converted(ValueRange target) const {
  if (target == range_) return *this;
  std::vector<float> out(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    float v = data_[i];
    if (range_ == ValueRange::unit && target == ValueRange::signed_unit) {
      v = 2.0f * v - 1.0f;
    } else if (range_ == ValueRange::signed_unit && target == ValueRange::unit) {
      v = 0.5f * (v + 1.0f);
    }
    out[i] = v;
  }
  return ImageBuffer(height_, width_, channels_, std::move(out), target);
}

ImageBuffer ImageBuffer::broadcast_to_rgb() const {
  if (channels_ == 3) return *this;
  if (channels_ != 1) fail(ErrorCode::invalid_argument, "broadcast_to_rgb expects 1 channel");
  std::vector<float> out(data_.size() * 3);
  for (std::size_t i = 0; i < data_.size(); ++i) out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = data_[i];
  return ImageBuffer(height_, width_, 3, std::move(out), range_);
}

Mask::Mask(int height, int width, float fill) : height_(height), width_(width) {
  check_dims(height, width, 1);
  data_.assign(static_cast<std::size_t>(height) * width, fill >= 0.5f ? 1.0f : 0.0f);
}

Mask::Mask(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width, 1);
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    fail(ErrorCode::shape_mismatch, "mask data length does not equal H*W");
  }
  for (float& v : data_) v = v >= 0.5f ? 1.0f : 0.0f;
}

Mask Mask::complement() const {
  Mask out(height_, width_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] != 0.0f ? 0.0f : 1.0f;
  return out;
}

std::size_t Mask::count_ones() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1.0f));
}

ImageBuffer Mask::to_image() const { return ImageBuffer(height_, width_, 1, data_, ValueRange::unit); }

Mask Mask::from_image(const ImageBuffer& img) {
  std::vector<float> data(static_cast<std::size_t>(img.height()) * img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) data[static_cast<std::size_t>(y) * img.width() + x] = img.at(y, x, 0);
  }
  return Mask(img.height(), img.width(), std::move(data));
}

namespace {

struct Taps {
  int x0, x1, y0, y1;
  double fx, fy;
};

Taps taps_for(double x, double y) {
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  return {static_cast<int>(xf), static_cast<int>(xf) + 1, static_cast<int>(yf), static_cast<int>(yf) + 1,
          x - xf, y - yf};
}

inline double fetch(const ImageBuffer& img, int xi, int yi, int c, BorderPolicy policy) {
  if (xi < 0 || yi < 0 || xi >= img.width() || yi >= img.height()) {
    if (policy == BorderPolicy::zero_fill) return 0.0;
    xi = std::clamp(xi, 0, img.width() - 1);
    yi = std::clamp(yi, 0, img.height() - 1);
  }
  return img.at(yi, xi, c);
}

}  // namespace

float sample_bilinear(const ImageBuffer& img, double x, double y, int c, BorderPolicy policy) {
  const Taps t = taps_for(x, y);
  const double top = (1.0 - t.fx) * fetch(img, t.x0, t.y0, c, policy) + t.fx * fetch(img, t.x1, t.y0, c, policy);
  const double bottom =
      (1.0 - t.fx) * fetch(img, t.x0, t.y1, c, policy) + t.fx * fetch(img, t.x1, t.y1, c, policy);
  return static_cast<float>((1.0 - t.fy) * top + t.fy * bottom);
}

void sample_bilinear(const ImageBuffer& img, double x, double y, BorderPolicy policy, std::span<float> out) {
  for (int c = 0; c < img.channels(); ++c) out[c] = sample_bilinear(img, x, y, c, policy);
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_height, int out_width) {
  if (out_height < 1 || out_width < 1) fail(ErrorCode::invalid_argument, "resize target must be at least 1x1");
  if (img.empty()) fail(ErrorCode::invalid_argument, "resize of empty image");
  ImageBuffer out(out_height, out_width, img.channels(), img.range());
  const double sy = static_cast<double>(img.height()) / out_height;
  const double sx = static_cast<double>(img.width()) / out_width;
  for (int y = 0; y < out_height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < out_width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(y, x, c) = sample_bilinear(img, src_x, src_y, c, BorderPolicy::edge_clamp);
      }
    }
  }
  return out;
}

ImageBuffer center_crop_resize(const ImageBuffer& img, int out_height, int out_width) {
  if (img.height() == out_height && img.width() == out_width) return img;
  const double target_aspect = static_cast<double>(out_width) / out_height;
  int crop_w = img.width();
  int crop_h = img.height();
  if (static_cast<double>(img.width()) / img.height() > target_aspect) {
    crop_w = std::max(1, static_cast<int>(std::lround(img.height() * target_aspect)));
  } else {
    crop_h = std::max(1, static_cast<int>(std::lround(img.width() / target_aspect)));
  }
  const int x0 = (img.width() - crop_w) / 2;
  const int y0 = (img.height() - crop_h) / 2;
  ImageBuffer crop(crop_h, crop_w, img.channels(), img.range());
  for (int y = 0; y < crop_h; ++y) {
    for (int x = 0; x < crop_w; ++x) {
      for (int c = 0; c < img.channels(); ++c) crop.at(y, x, c) = img.at(y + y0, x + x0, c);
    }
  }
  return resize_bilinear(crop, out_height, out_width);
}

ImageBuffer quantize_8bit(const ImageBuffer& img) {
  ImageBuffer unit = img.converted(ValueRange::unit);
  for (float& v : unit.data()) v = static_cast<float>(std::lround(v * 255.0f)) / 255.0f;
  return unit;
}

}  // namespace fisheyex
