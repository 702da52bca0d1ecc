#include "spg/oversegment.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace spg {

namespace {

struct Edge {
  int a;
  int b;
  double weight;
};

// Plain union-find. Roots are merged a<-b with no rank heuristic so the
// result depends only on the edge order.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  void join(int root_a, int root_b, double weight) {
    parent_[root_b] = root_a;
    size_[root_a] += size_[root_b];
    internal_[root_a] = weight;
  }

  int size(int root) const { return size_[root]; }
  double internal(int root) const { return internal_[root]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<double> internal_;
};

std::vector<Edge> collect_edges(const PointCloud& cloud, const NeighborGraph& graph,
                                const std::vector<Vec3>& normals,
                                const OversegmentParams& params) {
  // Undirected edge set from the adjacency lists, deduplicated as (a < b).
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (const Neighbor& nb : graph.adjacency[i]) {
      const int a = std::min<int>(static_cast<int>(i), nb.index);
      const int b = std::max<int>(static_cast<int>(i), nb.index);
      pairs.emplace_back(a, b);
    }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    double w = 1.0 - normals[a].dot(normals[b]);
    if (params.use_color)
      w += params.color_weight * (cloud.colors[a] - cloud.colors[b]).norm();
    edges.push_back({a, b, w});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  return edges;
}

}  // namespace

SuperpointPartition oversegment(const PointCloud& cloud, const OversegmentParams& params,
                                const NeighborGraph& graph) {
  cloud.validate();
  if (graph.size() != cloud.size())
    throw std::invalid_argument("graph does not match cloud");
  if (params.merge_threshold <= 0.0)
    throw std::invalid_argument("merge_threshold must be positive");
  if (params.min_segment_size < 1)
    throw std::invalid_argument("min_segment_size must be at least 1");

  const std::vector<Vec3>& normals =
      cloud.has_normals() ? cloud.normals : estimate_normals(cloud, graph).normals;

  const std::vector<Edge> edges = collect_edges(cloud, graph, normals, params);
  DisjointSet components(cloud.size());

  // FH predicate: merge when the edge is no heavier than both components'
  // internal difference plus the threshold credit k/|C|.
  const double k = params.merge_threshold;
  for (const Edge& e : edges) {
    const int ra = components.find(e.a);
    const int rb = components.find(e.b);
    if (ra == rb) continue;
    const double bound_a = components.internal(ra) + k / components.size(ra);
    const double bound_b = components.internal(rb) + k / components.size(rb);
    if (e.weight <= bound_a && e.weight <= bound_b) components.join(ra, rb, e.weight);
  }

  // Absorb small segments along their lowest-weight crossing edge. Ascending
  // order makes the first crossing edge the cheapest one; components of the
  // graph stay separate because no edge crosses them.
  for (const Edge& e : edges) {
    const int ra = components.find(e.a);
    const int rb = components.find(e.b);
    if (ra == rb) continue;
    if (components.size(ra) < params.min_segment_size ||
        components.size(rb) < params.min_segment_size)
      components.join(ra, rb, e.weight);
  }

  std::vector<int> labels(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    labels[i] = components.find(static_cast<int>(i));
  return partition_from_labels(labels, cloud);
}

SuperpointPartition compactify(const SuperpointPartition& partition) {
  SuperpointPartition out;
  out.labels.resize(partition.labels.size());

  std::unordered_map<int, int> remap;
  remap.reserve(partition.segment_sizes.empty() ? 64 : partition.segment_sizes.size());
  int max_old = -1;
  for (std::size_t i = 0; i < partition.labels.size(); ++i) {
    const int old = partition.labels[i];
    max_old = std::max(max_old, old);
    auto [it, inserted] = remap.emplace(old, static_cast<int>(remap.size()));
    out.labels[i] = it->second;
  }

  const int m = static_cast<int>(remap.size());
  out.segment_sizes.assign(m, 0);
  for (int label : out.labels) ++out.segment_sizes[label];

  if (static_cast<int>(partition.centroids.size()) > max_old) {
    out.centroids.resize(m);
    for (const auto& [old, fresh] : remap) out.centroids[fresh] = partition.centroids[old];
  }
  return out;
}

SuperpointPartition partition_from_labels(const std::vector<int>& labels,
                                          const PointCloud& cloud) {
  if (labels.size() != cloud.size())
    throw std::invalid_argument("label count does not match cloud");

  SuperpointPartition raw;
  raw.labels = labels;
  SuperpointPartition out = compactify(raw);

  const int m = out.segment_count();
  out.centroids.assign(m, Vec3::Zero());
  for (std::size_t i = 0; i < out.labels.size(); ++i)
    out.centroids[out.labels[i]] += cloud.positions[i];
  for (int j = 0; j < m; ++j) out.centroids[j] /= static_cast<double>(out.segment_sizes[j]);
  return out;
}

}  // namespace spg
