#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace spg {

using Vec3 = Eigen::Vector3d;

// Axis-aligned box as (cx, cy, cz, sx, sy, sz) in meters.
using Box6 = std::array<double, 6>;

/// Raw scene: N points with positions in meters and colors in [0,1].
/// Normals are empty until estimated (or loaded).
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;
  std::vector<Vec3> normals;

  std::size_t size() const { return positions.size(); }
  bool has_normals() const { return !normals.empty(); }

  /// Throws std::invalid_argument when a type invariant is violated
  /// (empty cloud, non-finite coordinate, color outside [0,1],
  /// non-unit normal).
  void validate() const;
};

struct Neighbor {
  int index;
  double dist_sq;
};

/// Exact k-NN adjacency. Lists are sorted ascending by squared distance,
/// ties by lower index; no self-edges.
struct NeighborGraph {
  int k_nn = 0;
  std::vector<std::vector<Neighbor>> adjacency;

  std::size_t size() const { return adjacency.size(); }
};

/// Exact nearest-neighbor search tree over a fixed point set. Results are
/// ordered by (distance, index), which makes every query bit-deterministic.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// The k nearest points to `query`, sorted by (squared distance, index).
  /// `exclude` removes one index from consideration (used for self-edges).
  std::vector<Neighbor> nearest(const Vec3& query, int k, int exclude = -1) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& order, int lo, int hi, int depth);

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

NeighborGraph build_knn_graph(const PointCloud& cloud, int k_nn);

struct NormalField {
  std::vector<Vec3> normals;
  std::vector<int> degenerate;  // points whose neighborhood collapsed
};

/// Per-point normals from the smallest-eigenvalue direction of the
/// neighborhood covariance, sign-fixed so z >= 0 (then y, then x when the
/// leading components vanish). Degenerate neighborhoods get (0,0,1).
NormalField estimate_normals(const PointCloud& cloud, const NeighborGraph& graph);

/// Ball-query result: `samples` reference indices per center. When fewer
/// than `samples` references fall inside the radius the nearest in-radius
/// index is repeated; when none do, the globally nearest reference fills
/// every slot and the center's fallback flag is set.
struct BallQueryResult {
  int samples = 0;
  std::vector<int> indices;        // centers.size() * samples, row-major
  std::vector<std::uint8_t> fallback;

  std::size_t center_count() const { return fallback.size(); }
  int index(std::size_t center, int slot) const {
    return indices[center * static_cast<std::size_t>(samples) + slot];
  }
  std::span<const int> row(std::size_t center) const {
    return {indices.data() + center * static_cast<std::size_t>(samples),
            static_cast<std::size_t>(samples)};
  }
};

/// Radius search with a fixed sample budget. Membership is inclusive
/// (dist <= radius); slots are filled nearest-first with ties broken by
/// lower index.
BallQueryResult ball_query(std::span<const Vec3> centers, std::span<const Vec3> ref_positions,
                           double radius, int samples);

/// Farthest-point sampling. The first index is seed mod N; every following
/// pick maximizes the distance to the already-selected set (ties by lower
/// index). Deterministic given (cloud, n, seed).
std::vector<int> fps_sample(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

}  // namespace spg
