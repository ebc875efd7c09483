#include "fisheyex/ad/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <fmt/core.h>

#include "fisheyex/error.hpp"
#include "fisheyex/image_io.hpp"

namespace fisheyex::ad {

namespace {

constexpr char kMagic[4] = {'C', 'K', 'P', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::truncated, "checkpoint is truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamStore<float>& params) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    if (name.size() > 0xFFFF) fail(ErrorCode::invalid_argument, "parameter name too long");
    out.push_back(static_cast<std::uint8_t>(name.size() & 0xFF));
    out.push_back(static_cast<std::uint8_t>(name.size() >> 8));
    out.insert(out.end(), name.begin(), name.end());
    const Tensor<float>& t = params.at(i);
    put_u32(out, static_cast<std::uint32_t>(t.shape.rank));
    for (int d = 0; d < t.shape.rank; ++d) put_u32(out, static_cast<std::uint32_t>(t.shape.dims[d]));
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

ParamStore<float> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::bad_magic, "not a checkpoint file (expected CKP1)");
  }
  Reader in(bytes);
  in.text(4);
  const std::uint32_t count = in.u32();
  ParamStore<float> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = in.text(in.u16());
    const std::uint32_t rank = in.u32();
    if (rank > 4) fail(ErrorCode::dimension_overflow, fmt::format("checkpoint tensor {} has rank {}", name, rank));
    Shape shape{{1, 1, 1, 1}, static_cast<int>(rank)};
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint32_t dim = in.u32();
      numel *= dim;
      if (dim == 0 || numel > (1ULL << 31)) {
        fail(ErrorCode::dimension_overflow, fmt::format("checkpoint tensor {} has invalid dims", name));
      }
      shape.dims[d] = static_cast<int>(dim);
    }
    const std::size_t index = params.add(name, shape);
    auto& data = params.at(index).data;
    for (float& v : data) v = std::bit_cast<float>(in.u32());
  }
  if (!in.done()) fail(ErrorCode::unsupported_format, "checkpoint has trailing bytes");
  return params;
}

void write_checkpoint(const std::filesystem::path& path, const ParamStore<float>& params) {
  write_bytes(path, encode_checkpoint(params));
}

ParamStore<float> read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_bytes(path)); }

void assign_checkpoint(ParamStore<float>& target, const ParamStore<float>& loaded) {
  if (target.size() != loaded.size()) {
    fail(ErrorCode::config_mismatch,
         fmt::format("checkpoint holds {} tensors, model expects {}", loaded.size(), target.size()));
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target.name(i) != loaded.name(i) || target.at(i).shape != loaded.at(i).shape) {
      fail(ErrorCode::config_mismatch,
           fmt::format("checkpoint tensor {} {} does not match model tensor {} {}", loaded.name(i),
                       loaded.at(i).shape.to_string(), target.name(i), target.at(i).shape.to_string()));
    }
  }
  for (std::size_t i = 0; i < target.size(); ++i) target.at(i).data = loaded.at(i).data;
}

}  // namespace fisheyex::ad
