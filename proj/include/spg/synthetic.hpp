#pragma once

#include <cstdint>

#include "spg/geometry.hpp"

namespace spg {

/// Deterministic desk-scale indoor scene: a floor, two walls, and a few
/// box-shaped objects, with per-surface colors and slight coordinate jitter.
/// Identical (point_count, seed) pairs produce bit-identical clouds.
PointCloud make_synthetic_scene(std::size_t point_count, std::uint64_t seed);

}  // namespace spg
