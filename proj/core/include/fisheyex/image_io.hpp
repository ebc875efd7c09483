#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fisheyex/image.hpp"

namespace fisheyex {

/// Decodes an 8-bit grayscale or RGB PNG into the unit range (byte v -> v / 255).
/// Grayscale stays single-channel unless `broadcast_rgb` is set.
ImageBuffer read_image(const std::filesystem::path& path, bool broadcast_rgb = false);

/// Encodes 1- or 3-channel images as 8-bit PNG, rounding to nearest. Signed and
/// unbounded buffers are converted to unit range first.
void write_image(const std::filesystem::path& path, const ImageBuffer& img);

/// RTF1 payload: little-endian "RTF1", u32 rank, rank x u32 dims, float32 data.
struct TensorFile {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  bool operator==(const TensorFile&) const = default;
};

std::vector<std::uint8_t> encode_tensor_file(const TensorFile& tensor);
TensorFile decode_tensor_file(const std::vector<std::uint8_t>& bytes);

TensorFile read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const TensorFile& tensor);

/// Images are stored with dims (H, W, C) and read back as unbounded float fields.
ImageBuffer read_tensor_image(const std::filesystem::path& path);
void write_tensor_image(const std::filesystem::path& path, const ImageBuffer& img);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace fisheyex
