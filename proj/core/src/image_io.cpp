#include "fisheyex/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "fisheyex/error.hpp"

namespace fisheyex {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::file_not_found, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io_failure, "short write to " + path.string());
}

ImageBuffer read_image(const fs::path& path, bool broadcast_rgb) {
  if (!fs::exists(path)) fail(ErrorCode::file_not_found, "no such image: " + path.string());
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.string().c_str()) == 0) {
    fail(ErrorCode::unsupported_format, "not a readable PNG: " + path.string() + " (" + image.message + ")");
  }
  if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
    png_image_free(&image);
    fail(ErrorCode::unsupported_format, "unsupported bit depth (16-bit PNG): " + path.string());
  }
  if ((image.format & PNG_FORMAT_FLAG_ALPHA) != 0) {
    png_image_free(&image);
    fail(ErrorCode::unsupported_format, "unsupported channel count (alpha channel): " + path.string());
  }
  const int channels = (image.format & PNG_FORMAT_FLAG_COLOR) != 0 ? 3 : 1;
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int height = static_cast<int>(image.height);
  const int width = static_cast<int>(image.width);
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    fail(ErrorCode::unsupported_format, std::string("PNG decode failed: ") + image.message);
  }
  std::vector<float> data(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) data[i] = static_cast<float>(buffer[i]) / 255.0f;
  ImageBuffer out(height, width, channels, std::move(data), ValueRange::unit);
  return broadcast_rgb ? out.broadcast_to_rgb() : out;
}

void write_image(const fs::path& path, const ImageBuffer& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    fail(ErrorCode::unsupported_format, "PNG output supports 1 or 3 channels");
  }
  const ImageBuffer unit = img.converted(ValueRange::unit);
  std::vector<png_byte> buffer(unit.size());
  const auto values = unit.data();
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const float v = std::clamp(values[i], 0.0f, 1.0f);
    buffer[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr) == 0) {
    fail(ErrorCode::io_failure, "PNG encode failed for " + path.string() + ": " + image.message);
  }
}

namespace {

constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::truncated, "RTF1 payload truncated");
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensor_file(const TensorFile& tensor) {
  std::uint64_t count = 1;
  for (auto d : tensor.dims) count *= d;
  if (count != tensor.data.size()) fail(ErrorCode::shape_mismatch, "RTF1 dims do not match payload length");
  std::vector<std::uint8_t> out{'R', 'T', 'F', '1'};
  out.reserve(8 + 4 * tensor.dims.size() + 4 * tensor.data.size());
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  for (float v : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

TensorFile decode_tensor_file(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "RTF1", 4) != 0) {
    fail(ErrorCode::bad_magic, "not an RTF1 tensor file");
  }
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  ByteReader reader(body);
  TensorFile out;
  const std::uint32_t rank = reader.u32();
  if (rank > kMaxRank) fail(ErrorCode::dimension_overflow, "RTF1 rank too large");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = reader.u32();
    out.dims.push_back(d);
    if (d != 0 && count > kMaxElements / d) fail(ErrorCode::dimension_overflow, "RTF1 element count overflows");
    count *= d;
  }
  reader.need(count * 4);
  out.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) out.data[i] = std::bit_cast<float>(reader.u32());
  if (reader.remaining() != 0) fail(ErrorCode::unsupported_format, "RTF1 has trailing bytes");
  return out;
}

TensorFile read_tensor_file(const fs::path& path) { return decode_tensor_file(read_bytes(path)); }

void write_tensor_file(const fs::path& path, const TensorFile& tensor) {
  write_bytes(path, encode_tensor_file(tensor));
}

ImageBuffer read_tensor_image(const fs::path& path) {
  TensorFile t = read_tensor_file(path);
  std::uint32_t h = 1, w = 1, c = 1;
  if (t.dims.size() == 3) {
    h = t.dims[0], w = t.dims[1], c = t.dims[2];
  } else if (t.dims.size() == 2) {
    h = t.dims[0], w = t.dims[1];
  } else if (t.dims.size() == 1) {
    w = t.dims[0];
  } else {
    fail(ErrorCode::unsupported_format, "RTF1 image must have rank 1-3");
  }
  if (h > std::numeric_limits<int>::max() || w > std::numeric_limits<int>::max()) {
    fail(ErrorCode::dimension_overflow, "RTF1 image dims exceed int range");
  }
  return ImageBuffer(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), std::move(t.data),
                     ValueRange::unbounded);
}

void write_tensor_image(const fs::path& path, const ImageBuffer& img) {
  TensorFile t;
  t.dims = {static_cast<std::uint32_t>(img.height()), static_cast<std::uint32_t>(img.width()),
            static_cast<std::uint32_t>(img.channels())};
  t.data.assign(img.data().begin(), img.data().end());
  write_tensor_file(path, t);
}

}  // namespace fisheyex
