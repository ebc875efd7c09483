#pragma once

#include <cstdint>
#include <vector>

#include "fisheyex/image.hpp"

namespace fisheyex::pipeline {

/// Road-like RGB scene in unit range: gradient sky, textured ground with lane
/// lines converging on a vanishing point, box buildings on the horizon, discs
/// and poles. Deterministic in `seed`.
ImageBuffer procedural_scene(std::uint64_t seed, int height, int width);

/// n scenes; scene i uses the seed stream mix_seed(seed, i).
std::vector<ImageBuffer> procedural_scenes(std::uint64_t seed, int n, int height, int width);

}  // namespace fisheyex::pipeline
