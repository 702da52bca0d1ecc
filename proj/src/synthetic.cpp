#include "spg/synthetic.hpp"

#include <Eigen/Geometry>
#include <stdexcept>

#include "spg/rng.hpp"

namespace spg {

namespace {

// Surfaces of a 4 m x 4 m x 2.5 m room plus three clutter boxes. Weights
// control how many points land on each.
struct Patch {
  Vec3 origin;
  Vec3 edge_u;
  Vec3 edge_v;
  Vec3 color;
  double weight;
};

const Patch kPatches[] = {
    // floor and two walls
    {{0.0, 0.0, 0.0}, {4.0, 0.0, 0.0}, {0.0, 4.0, 0.0}, {0.55, 0.45, 0.35}, 0.40},
    {{0.0, 0.0, 0.0}, {0.0, 4.0, 0.0}, {0.0, 0.0, 2.5}, {0.85, 0.85, 0.80}, 0.14},
    {{0.0, 0.0, 0.0}, {4.0, 0.0, 0.0}, {0.0, 0.0, 2.5}, {0.80, 0.82, 0.85}, 0.14},
    // table top, cabinet front, crate side
    {{1.0, 1.0, 0.7}, {1.2, 0.0, 0.0}, {0.0, 0.8, 0.0}, {0.45, 0.30, 0.20}, 0.12},
    {{3.0, 0.5, 0.0}, {0.0, 0.9, 0.0}, {0.0, 0.0, 1.6}, {0.25, 0.25, 0.30}, 0.10},
    {{0.5, 3.0, 0.0}, {0.7, 0.0, 0.0}, {0.0, 0.0, 0.5}, {0.60, 0.55, 0.25}, 0.10},
};

}  // namespace

PointCloud make_synthetic_scene(std::size_t point_count, std::uint64_t seed) {
  if (point_count < 1) throw std::invalid_argument("empty input");
  std::mt19937_64 gen(seed ^ 0x7363656e65ULL);

  double weight_sum = 0.0;
  for (const Patch& p : kPatches) weight_sum += p.weight;

  PointCloud cloud;
  cloud.positions.reserve(point_count);
  cloud.colors.reserve(point_count);

  std::size_t emitted = 0;
  double carried = 0.0;
  for (const Patch& patch : kPatches) {
    carried += patch.weight / weight_sum * static_cast<double>(point_count);
    std::size_t quota = static_cast<std::size_t>(carried) - emitted;
    if (&patch == &kPatches[std::size(kPatches) - 1]) quota = point_count - emitted;
    const Vec3 surface_normal = patch.edge_u.cross(patch.edge_v).normalized();
    for (std::size_t i = 0; i < quota; ++i) {
      const double u = unit_uniform(gen);
      const double v = unit_uniform(gen);
      const double jitter = 0.002 * standard_normal(gen);
      cloud.positions.push_back(patch.origin + u * patch.edge_u + v * patch.edge_v +
                                jitter * surface_normal);
      Vec3 color = patch.color + Vec3::Constant(0.03 * symmetric_uniform(gen));
      cloud.colors.push_back(color.cwiseMax(0.0).cwiseMin(1.0));
    }
    emitted += quota;
  }
  return cloud;
}

}  // namespace spg
