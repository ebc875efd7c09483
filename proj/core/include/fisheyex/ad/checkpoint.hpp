#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fisheyex/ad/tensor.hpp"

namespace fisheyex::ad {

/// CKP1, little-endian: "CKP1", u32 count, then per parameter u16 name
/// length, name bytes, u32 rank, rank x u32 dims, float32 payload.
std::vector<std::uint8_t> encode_checkpoint(const ParamStore<float>& params);
ParamStore<float> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const ParamStore<float>& params);
ParamStore<float> read_checkpoint(const std::filesystem::path& path);

/// Copies values from `loaded` into `target`; names, order and shapes must
/// match exactly (config_mismatch otherwise).
void assign_checkpoint(ParamStore<float>& target, const ParamStore<float>& loaded);

}  // namespace fisheyex::ad
