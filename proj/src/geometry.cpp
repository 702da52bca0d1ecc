#include "spg/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace spg {

namespace {

bool finite3(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

// (dist_sq, index) lexicographic order; the single tie-break rule used by
// every spatial query in this module.
bool closer(double da, int ia, double db, int ib) {
  if (da != db) return da < db;
  return ia < ib;
}

bool closer(const Neighbor& a, const Neighbor& b) {
  return closer(a.dist_sq, a.index, b.dist_sq, b.index);
}

}  // namespace

void PointCloud::validate() const {
  if (positions.empty()) throw std::invalid_argument("empty input");
  if (colors.size() != positions.size())
    throw std::invalid_argument("color count does not match point count");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!finite3(positions[i])) throw std::invalid_argument("invalid coordinate");
    const Vec3& c = colors[i];
    if (!finite3(c) || c.minCoeff() < 0.0 || c.maxCoeff() > 1.0)
      throw std::invalid_argument("invalid color");
  }
  if (!normals.empty()) {
    if (normals.size() != positions.size())
      throw std::invalid_argument("normal count does not match point count");
    for (const Vec3& n : normals) {
      if (!finite3(n) || std::abs(n.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("non-unit normal");
    }
  }
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) return;
  std::vector<int> order(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  nodes_.reserve(points_.size());
  root_ = build(order, 0, static_cast<int>(order.size()), 0);
}

int KdTree::build(std::vector<int>& order, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = lo + (hi - lo) / 2;
  // Total order on (coordinate, index) keeps the split point unique, so the
  // tree shape does not depend on the std::nth_element implementation.
  std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi,
                   [&](int a, int b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     if (ca != cb) return ca < cb;
                     return a < b;
                   });
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.push_back({order[mid], axis, -1, -1});
  const int left = build(order, lo, mid, depth + 1);
  const int right = build(order, mid + 1, hi, depth + 1);
  nodes_[node_id].left = left;
  nodes_[node_id].right = right;
  return node_id;
}

std::vector<Neighbor> KdTree::nearest(const Vec3& query, int k, int exclude) const {
  if (k <= 0 || points_.empty()) return {};
  const auto worse = [](const Neighbor& a, const Neighbor& b) { return closer(a, b); };
  // Max-heap on (dist_sq, index): top is the current worst candidate.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> best(worse);

  const auto visit = [&](const auto& self, int node_id) -> void {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    const Vec3& p = points_[node.point];
    if (node.point != exclude) {
      const double d2 = (p - query).squaredNorm();
      if (static_cast<int>(best.size()) < k) {
        best.push({node.point, d2});
      } else if (closer(d2, node.point, best.top().dist_sq, best.top().index)) {
        best.pop();
        best.push({node.point, d2});
      }
    }
    const double gap = query[node.axis] - p[node.axis];
    const int near_side = gap < 0.0 ? node.left : node.right;
    const int far_side = gap < 0.0 ? node.right : node.left;
    self(self, near_side);
    // A far-side point at exactly gap^2 could still win its tie on index,
    // so only prune on strict inequality.
    if (static_cast<int>(best.size()) < k || gap * gap <= best.top().dist_sq)
      self(self, far_side);
  };
  visit(visit, root_);

  std::vector<Neighbor> result;
  result.resize(best.size());
  for (std::size_t i = result.size(); i-- > 0;) {
    result[i] = best.top();
    best.pop();
  }
  return result;
}

NeighborGraph build_knn_graph(const PointCloud& cloud, int k_nn) {
  cloud.validate();
  if (k_nn < 1) throw std::invalid_argument("k_nn must be at least 1");
  const std::size_t n = cloud.size();
  const int want = static_cast<int>(std::min<std::size_t>(k_nn, n - 1));

  KdTree tree(cloud.positions);
  NeighborGraph graph;
  graph.k_nn = k_nn;
  graph.adjacency.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    graph.adjacency[i] = tree.nearest(cloud.positions[i], want, static_cast<int>(i));
  return graph;
}

NormalField estimate_normals(const PointCloud& cloud, const NeighborGraph& graph) {
  cloud.validate();
  if (graph.size() != cloud.size())
    throw std::invalid_argument("graph does not match cloud");

  NormalField field;
  field.normals.resize(cloud.size());
  constexpr double kAxisTol = 1e-9;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Vec3 mean = cloud.positions[i];
    for (const Neighbor& nb : graph.adjacency[i]) mean += cloud.positions[nb.index];
    mean /= static_cast<double>(graph.adjacency[i].size() + 1);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    const auto accumulate = [&](const Vec3& p) {
      const Vec3 d = p - mean;
      cov += d * d.transpose();
    };
    accumulate(cloud.positions[i]);
    for (const Neighbor& nb : graph.adjacency[i]) accumulate(cloud.positions[nb.index]);

    if (cov.trace() < 1e-30) {
      field.normals[i] = Vec3(0.0, 0.0, 1.0);
      field.degenerate.push_back(static_cast<int>(i));
      continue;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    Vec3 normal = solver.eigenvectors().col(0);  // smallest eigenvalue
    normal.normalize();

    // Sign convention: z >= 0; fall through to y, then x, when the leading
    // component is numerically zero.
    double lead = normal.z();
    if (std::abs(lead) <= kAxisTol) lead = normal.y();
    if (std::abs(lead) <= kAxisTol) lead = normal.x();
    if (lead < 0.0) normal = -normal;
    field.normals[i] = normal;
  }
  return field;
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  static std::uint64_t mix(std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
  }
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = mix(static_cast<std::uint64_t>(k.x));
    h = mix(h ^ static_cast<std::uint64_t>(k.y));
    h = mix(h ^ static_cast<std::uint64_t>(k.z));
    return static_cast<std::size_t>(h);
  }
};

CellKey cell_of(const Vec3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

}  // namespace

BallQueryResult ball_query(std::span<const Vec3> centers, std::span<const Vec3> ref_positions,
                           double radius, int samples) {
  if (ref_positions.empty()) throw std::invalid_argument("no reference points");
  if (radius <= 0.0) throw std::invalid_argument("radius must be positive");
  if (samples < 1) throw std::invalid_argument("samples must be at least 1");

  // Cell size equals the query radius, so every in-radius reference lives in
  // the 3x3x3 block around the center's cell.
  std::unordered_map<CellKey, std::vector<int>, CellKeyHash> grid;
  grid.reserve(ref_positions.size());
  for (std::size_t i = 0; i < ref_positions.size(); ++i)
    grid[cell_of(ref_positions[i], radius)].push_back(static_cast<int>(i));

  BallQueryResult result;
  result.samples = samples;
  result.indices.resize(centers.size() * static_cast<std::size_t>(samples));
  result.fallback.assign(centers.size(), 0);

  const double r2 = radius * radius;
  std::vector<Neighbor> hits;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const Vec3& center = centers[c];
    const CellKey home = cell_of(center, radius);
    hits.clear();
    for (std::int64_t dz = -1; dz <= 1; ++dz)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = grid.find({home.x + dx, home.y + dy, home.z + dz});
          if (it == grid.end()) continue;
          for (int idx : it->second) {
            const double d2 = (ref_positions[idx] - center).squaredNorm();
            if (d2 <= r2) hits.push_back({idx, d2});
          }
        }
    std::sort(hits.begin(), hits.end(),
              [](const Neighbor& a, const Neighbor& b) { return closer(a, b); });

    int* row = result.indices.data() + c * static_cast<std::size_t>(samples);
    if (hits.empty()) {
      // Empty ball: the globally nearest reference fills every slot.
      int best = 0;
      double best_d2 = (ref_positions[0] - center).squaredNorm();
      for (std::size_t i = 1; i < ref_positions.size(); ++i) {
        const double d2 = (ref_positions[i] - center).squaredNorm();
        if (closer(d2, static_cast<int>(i), best_d2, best)) {
          best = static_cast<int>(i);
          best_d2 = d2;
        }
      }
      std::fill(row, row + samples, best);
      result.fallback[c] = 1;
    } else {
      for (int s = 0; s < samples; ++s)
        row[s] = s < static_cast<int>(hits.size()) ? hits[s].index : hits[0].index;
    }
  }
  return result;
}

std::vector<int> fps_sample(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  cloud.validate();
  const std::size_t total = cloud.size();
  if (n < 1 || n > total) throw std::invalid_argument("sample larger than population");

  std::vector<int> selected;
  selected.reserve(n);
  std::vector<double> min_dist(total, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> taken(total, 0);

  int current = static_cast<int>(seed % total);
  selected.push_back(current);
  taken[current] = 1;

  for (std::size_t step = 1; step < n; ++step) {
    const Vec3& latest = cloud.positions[current];
    int next = -1;
    double best = -1.0;
    for (std::size_t i = 0; i < total; ++i) {
      if (taken[i]) continue;
      const double d2 = (cloud.positions[i] - latest).squaredNorm();
      if (d2 < min_dist[i]) min_dist[i] = d2;
      if (min_dist[i] > best) {  // strict: ties keep the lower index
        best = min_dist[i];
        next = static_cast<int>(i);
      }
    }
    current = next;
    selected.push_back(current);
    taken[current] = 1;
  }
  return selected;
}

}  // namespace spg
