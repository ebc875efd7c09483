#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <random>

#include "fisheyex/error.hpp"
#include "fisheyex/image.hpp"
#include "fisheyex/image_io.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace fisheyex;

TEST(ImageBuffer, ClampsOnIngest) {
  ImageBuffer img(1, 3, 1, {-0.5f, 0.5f, 1.5f});
  EXPECT_EQ(img.at(0, 0), 0.0f);
  EXPECT_EQ(img.at(0, 1), 0.5f);
  EXPECT_EQ(img.at(0, 2), 1.0f);
  ImageBuffer s(1, 2, 1, {-2.0f, 2.0f}, ValueRange::signed_unit);
  EXPECT_EQ(s.at(0, 0), -1.0f);
  EXPECT_EQ(s.at(0, 1), 1.0f);
}

TEST(ImageBuffer, RejectsWrongLength) {
  EXPECT_THROW(ImageBuffer(2, 2, 3, std::vector<float>(11)), Error);
}

TEST(ImageBuffer, RangeConversionRoundTrip) {
  const ImageBuffer img = oracle::random_image(5, 4, 3, 1);
  const ImageBuffer back = img.converted(ValueRange::signed_unit).converted(ValueRange::unit);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-6);
}

TEST(Mask, ThresholdsToBinary) {
  Mask m(1, 3, {0.2f, 0.5f, 0.9f});
  EXPECT_EQ(m.at(0, 0), 0.0f);
  EXPECT_EQ(m.at(0, 1), 1.0f);
  EXPECT_EQ(m.at(0, 2), 1.0f);
  EXPECT_EQ(m.count_ones(), 2u);
}

TEST(SampleBilinear, ExactAtIntegerCoordinates) {
  const ImageBuffer img = oracle::random_image(7, 9, 3, 2);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        ASSERT_EQ(sample_bilinear(img, x, y, c, BorderPolicy::edge_clamp), img.at(y, x, c));
  EXPECT_EQ(sample_bilinear(img, 2.0, 3.0, 1, BorderPolicy::zero_fill), img.at(3, 2, 1));
}

TEST(SampleBilinear, MidpointOfTwoPixels) {
  ImageBuffer img(1, 2, 1, {0.0f, 1.0f});
  EXPECT_FLOAT_EQ(sample_bilinear(img, 0.5, 0.0, 0, BorderPolicy::edge_clamp), 0.5f);
}

TEST(SampleBilinear, MatchesFourCornerOracle) {
  const ImageBuffer img = oracle::random_image(8, 8, 1, 3);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> pos(0.0, 7.0);
  for (int i = 0; i < 100; ++i) {
    const double x = pos(gen), y = pos(gen);
    EXPECT_NEAR(sample_bilinear(img, x, y, 0, BorderPolicy::edge_clamp), oracle::bilinear(img, x, y, 0), 1e-6);
  }
}

TEST(SampleBilinear, NoOvershootOfNeighbours) {
  const ImageBuffer img = oracle::random_image(6, 6, 1, 5);
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> pos(0.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    const double x = pos(gen), y = pos(gen);
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const float v[4] = {img.at(y0, x0), img.at(y0, x0 + 1), img.at(y0 + 1, x0), img.at(y0 + 1, x0 + 1)};
    const float s = sample_bilinear(img, x, y, 0, BorderPolicy::edge_clamp);
    EXPECT_GE(s, *std::min_element(v, v + 4) - 1e-7f);
    EXPECT_LE(s, *std::max_element(v, v + 4) + 1e-7f);
  }
}

TEST(SampleBilinear, BorderPolicies) {
  ImageBuffer img(2, 2, 1, {1.0f, 1.0f, 1.0f, 1.0f});
  EXPECT_EQ(sample_bilinear(img, -3.0, 0.0, 0, BorderPolicy::edge_clamp), 1.0f);
  EXPECT_EQ(sample_bilinear(img, -3.0, 0.0, 0, BorderPolicy::zero_fill), 0.0f);
  EXPECT_FLOAT_EQ(sample_bilinear(img, -0.5, 0.0, 0, BorderPolicy::zero_fill), 0.5f);
}

TEST(ResizeBilinear, IdentityAtSameSize) {
  const ImageBuffer img = oracle::random_image(5, 7, 3, 7);
  EXPECT_EQ(resize_bilinear(img, 5, 7), img);
}

TEST(ResizeBilinear, ConstantStaysConstant) {
  ImageBuffer img(4, 4, 1, std::vector<float>(16, 0.375f));
  const ImageBuffer out = resize_bilinear(img, 9, 3);
  for (float v : out.data()) EXPECT_FLOAT_EQ(v, 0.375f);
}

TEST(ResizeBilinear, RampMatchesMappedCenters) {
  ImageBuffer img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(y, x) = (x + 4 * y) / 15.0f;
  const ImageBuffer out = resize_bilinear(img, 8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const double sx = (x + 0.5) * 0.5 - 0.5, sy = (y + 0.5) * 0.5 - 0.5;
      EXPECT_NEAR(out.at(y, x), oracle::bilinear(img, sx, sy, 0), 1e-6);
    }
}

TEST(Png, QuantizedRoundTripWithinHalfStep) {
  TempDir dir;
  const ImageBuffer img = oracle::random_image(6, 5, 3, 8);
  write_image(dir.path() / "a.png", img);
  const ImageBuffer back = read_image(dir.path() / "a.png");
  ASSERT_EQ(back.channels(), 3);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(back.data()[i] - img.data()[i]), 1.0f / 510 + 1e-7f);
}

TEST(Png, DoubleRoundTripIsByteStable) {
  TempDir dir;
  write_image(dir.path() / "a.png", oracle::random_image(9, 11, 3, 9));
  write_image(dir.path() / "b.png", read_image(dir.path() / "a.png"));
  write_image(dir.path() / "c.png", read_image(dir.path() / "b.png"));
  EXPECT_EQ(read_bytes(dir.path() / "b.png"), read_bytes(dir.path() / "c.png"));
}

TEST(Png, GrayscaleKeepsOneChannelUnlessBroadcast) {
  TempDir dir;
  write_image(dir.path() / "g.png", oracle::random_image(4, 4, 1, 10));
  EXPECT_EQ(read_image(dir.path() / "g.png").channels(), 1);
  const ImageBuffer rgb = read_image(dir.path() / "g.png", true);
  ASSERT_EQ(rgb.channels(), 3);
  EXPECT_EQ(rgb.at(1, 2, 0), rgb.at(1, 2, 2));
}

TEST(Png, ErrorsAreDistinct) {
  TempDir dir;
  try {
    read_image(dir.path() / "missing.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::file_not_found);
  }
  write_bytes(dir.path() / "junk.png", {1, 2, 3, 4, 5, 6, 7, 8});
  try {
    read_image(dir.path() / "junk.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsupported_format);
  }
}

TEST(TensorFile, RoundTripIsBitExact) {
  std::mt19937_64 gen(11);
  TensorFile t{{3, 4, 2}, {}};
  for (int i = 0; i < 24; ++i) t.data.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(gen() & 0x7F7FFFFF)));
  EXPECT_EQ(decode_tensor_file(encode_tensor_file(t)), t);
}

TEST(TensorFile, HeaderDims) {
  TempDir dir;
  ImageBuffer img(2, 3, 1, ValueRange::unbounded);
  write_tensor_image(dir.path() / "t.rtf", img);
  const TensorFile t = read_tensor_file(dir.path() / "t.rtf");
  EXPECT_EQ(t.dims, (std::vector<std::uint32_t>{2, 3, 1}));
}

TEST(TensorFile, HandBuiltBytesDecode) {
  // "RTF1", rank 1, dim 2, then 1.0f (0x3F800000) and -2.5f (0xC0200000).
  const std::vector<std::uint8_t> bytes = {'R', 'T', 'F', '1', 1, 0, 0, 0, 2, 0, 0, 0,
                                           0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x20, 0xC0};
  const TensorFile t = decode_tensor_file(bytes);
  ASSERT_EQ(t.dims, std::vector<std::uint32_t>{2});
  EXPECT_EQ(t.data[0], 1.0f);
  EXPECT_EQ(t.data[1], -2.5f);
}

TEST(TensorFile, Errors) {
  auto code_of = [](const std::vector<std::uint8_t>& bytes) {
    try {
      decode_tensor_file(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_failure;
  };
  EXPECT_EQ(code_of({'X', 'T', 'F', '1', 0, 0, 0, 0}), ErrorCode::bad_magic);
  EXPECT_EQ(code_of({'R', 'T', 'F', '1', 1, 0, 0, 0, 4, 0, 0, 0, 0, 0}), ErrorCode::truncated);
  EXPECT_EQ(code_of({'R', 'T', 'F', '1', 2, 0, 0, 0, 0xFF, 0xFF, 0xFF, 0x7F, 0xFF, 0xFF, 0xFF, 0x7F}),
            ErrorCode::dimension_overflow);
}

TEST(Quantize, MatchesEightBitGrid) {
  const ImageBuffer q = quantize_8bit(oracle::random_image(3, 3, 1, 12));
  for (float v : q.data()) EXPECT_FLOAT_EQ(std::round(v * 255.0f), v * 255.0f);
}

#include <png.h>

namespace {

void write_raw_png(const std::filesystem::path& path, png_uint_32 format, const void* pixels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 2;
  image.format = format;
  ASSERT_NE(png_image_write_to_file(&image, path.c_str(), 0, pixels, 0, nullptr), 0);
}

ErrorCode read_error(const std::filesystem::path& path, std::string* message) {
  try {
    read_image(path);
  } catch (const Error& e) {
    *message = e.what();
    return e.code();
  }
  return ErrorCode::io_failure;
}

}  // namespace

TEST(Png, RejectsSixteenBitAndAlpha) {
  TempDir dir;
  const std::uint16_t deep[4] = {0, 1000, 40000, 65535};
  write_raw_png(dir.path() / "deep.png", PNG_FORMAT_LINEAR_Y, deep);
  const std::uint8_t rgba[16] = {};
  write_raw_png(dir.path() / "alpha.png", PNG_FORMAT_RGBA, rgba);
  std::string deep_msg, alpha_msg;
  EXPECT_EQ(read_error(dir.path() / "deep.png", &deep_msg), ErrorCode::unsupported_format);
  EXPECT_EQ(read_error(dir.path() / "alpha.png", &alpha_msg), ErrorCode::unsupported_format);
  EXPECT_NE(deep_msg.find("bit depth"), std::string::npos);
  EXPECT_NE(alpha_msg.find("channel count"), std::string::npos);
}
