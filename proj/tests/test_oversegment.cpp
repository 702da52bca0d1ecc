#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "spg/oversegment.hpp"
#include "test_support.hpp"

using namespace spg;

namespace {

using spg::test::cloud_with_random_normals;
using spg::test::reference_fh;

std::vector<int> graph_components(const NeighborGraph& graph) {
  std::vector<int> comp(graph.size(), -1);
  int next = 0;
  for (std::size_t start = 0; start < graph.size(); ++start) {
    if (comp[start] >= 0) continue;
    std::vector<std::size_t> frontier{start};
    comp[start] = next;
    while (!frontier.empty()) {
      const std::size_t v = frontier.back();
      frontier.pop_back();
      for (const Neighbor& nb : graph.adjacency[v])
        if (comp[nb.index] < 0) {
          comp[nb.index] = next;
          frontier.push_back(nb.index);
        }
    }
    ++next;
  }
  return comp;
}

void check_partition_invariants(const SuperpointPartition& p, const PointCloud& cloud) {
  REQUIRE(p.labels.size() == cloud.size());
  const int m = p.segment_count();
  std::vector<int> counted(m, 0);
  std::vector<Vec3> sums(m, Vec3::Zero());
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    REQUIRE(p.labels[i] >= 0);
    REQUIRE(p.labels[i] < m);
    ++counted[p.labels[i]];
    sums[p.labels[i]] += cloud.positions[i];
  }
  for (int j = 0; j < m; ++j) {
    CHECK(counted[j] == p.segment_sizes[j]);
    CHECK(counted[j] >= 1);
    CHECK((sums[j] / counted[j] - p.centroids[j]).norm() < 1e-6);
  }
}

}  // namespace

TEST_CASE("oversegment: separated planar patches never share a segment") {
  std::vector<Vec3> points;
  std::vector<int> patch_of;
  for (int patch = 0; patch < 2; ++patch)
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        points.emplace_back(0.05 * i + patch * 1.45, 0.05 * j, 0.0);
        patch_of.push_back(patch);
      }
  PointCloud cloud;
  cloud.positions = points;
  cloud.colors.assign(points.size(), Vec3(0.5, 0.5, 0.5));

  OversegmentParams params;
  params.min_segment_size = 4;
  const NeighborGraph graph = build_knn_graph(cloud, params.k_nn);

  // Oracle: the 1 m gap splits the k-NN graph into components.
  const std::vector<int> comp = graph_components(graph);
  std::set<int> left_comps, right_comps;
  for (std::size_t i = 0; i < comp.size(); ++i)
    (patch_of[i] == 0 ? left_comps : right_comps).insert(comp[i]);
  for (int c : left_comps) REQUIRE(right_comps.count(c) == 0);

  const SuperpointPartition partition = oversegment(cloud, params, graph);
  CHECK(partition.segment_count() >= 2);
  std::set<int> left_labels, right_labels;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    (patch_of[i] == 0 ? left_labels : right_labels).insert(partition.labels[i]);
  for (int label : left_labels) CHECK(right_labels.count(label) == 0);
  check_partition_invariants(partition, cloud);
}

TEST_CASE("oversegment: singleton cloud") {
  PointCloud cloud;
  cloud.positions = {Vec3(1, 2, 3)};
  cloud.colors = {Vec3(0.2, 0.4, 0.6)};
  const NeighborGraph graph = build_knn_graph(cloud, 8);
  const SuperpointPartition partition = oversegment(cloud, OversegmentParams{}, graph);
  CHECK(partition.segment_count() == 1);
  CHECK(partition.labels == std::vector<int>{0});
  CHECK(partition.segment_sizes == std::vector<int>{1});
  CHECK(partition.centroids[0] == Vec3(1, 2, 3));
}

TEST_CASE("oversegment: bit-identical across repeated runs") {
  const PointCloud cloud = cloud_with_random_normals(400, 77);
  OversegmentParams params;
  params.min_segment_size = 5;
  params.merge_threshold = 0.3;
  const NeighborGraph graph = build_knn_graph(cloud, params.k_nn);
  const SuperpointPartition first = oversegment(cloud, params, graph);
  const SuperpointPartition second = oversegment(cloud, params, graph);
  CHECK(first.labels == second.labels);
  CHECK(first.segment_sizes == second.segment_sizes);
}

TEST_CASE("oversegment: matches the reference implementation on random graphs") {
  for (std::uint64_t trial = 0; trial < 12; ++trial) {
    std::mt19937_64 gen(300 + trial);
    const std::size_t n = 20 + gen() % 481;
    OversegmentParams params;
    params.k_nn = 4 + static_cast<int>(gen() % 6);
    params.merge_threshold = uniform_in(gen, 0.05, 0.8);
    params.min_segment_size = 1 + static_cast<int>(gen() % 12);
    params.use_color = (gen() & 1) != 0;

    const PointCloud cloud = cloud_with_random_normals(n, 8800 + trial);
    const NeighborGraph graph = build_knn_graph(cloud, params.k_nn);
    const SuperpointPartition partition = oversegment(cloud, params, graph);
    const std::vector<int> expected = reference_fh(cloud, graph, params);
    REQUIRE(partition.labels == expected);
    check_partition_invariants(partition, cloud);
  }
}

TEST_CASE("oversegment: segment count weakly decreases with merge_threshold") {
  const PointCloud cloud = cloud_with_random_normals(350, 123);
  OversegmentParams params;
  params.min_segment_size = 1;
  const NeighborGraph graph = build_knn_graph(cloud, params.k_nn);
  int previous = std::numeric_limits<int>::max();
  for (int step = 0; step < 10; ++step) {
    params.merge_threshold = 0.02 + 0.25 * step;
    const int m = oversegment(cloud, params, graph).segment_count();
    CHECK(m <= previous);
    previous = m;
  }
}

TEST_CASE("compactify: renumbering fixtures") {
  SuperpointPartition raw;
  raw.labels = {5, 5, 2};
  CHECK(compactify(raw).labels == std::vector<int>{0, 0, 1});

  raw.labels = {1, 0, 1, 0};
  CHECK(compactify(raw).labels == std::vector<int>{0, 1, 0, 1});

  raw.labels = {0, 0, 1, 2};
  const SuperpointPartition once = compactify(raw);
  CHECK(once.labels == raw.labels);  // already compact
  const SuperpointPartition twice = compactify(once);
  CHECK(twice.labels == once.labels);
  CHECK(twice.segment_sizes == once.segment_sizes);
}

TEST_CASE("compactify: carries centroids through the renumbering") {
  SuperpointPartition raw;
  raw.labels = {3, 3, 0};
  raw.centroids = {Vec3(9, 9, 9), Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(1, 1, 1)};
  const SuperpointPartition compact = compactify(raw);
  REQUIRE(compact.centroids.size() == 2);
  CHECK(compact.centroids[0] == Vec3(1, 1, 1));
  CHECK(compact.centroids[1] == Vec3(9, 9, 9));
  CHECK(compact.segment_sizes == std::vector<int>{2, 1});
}
