#pragma once

#include <vector>

#include "spg/geometry.hpp"

namespace spg {

struct OversegmentParams {
  int k_nn = 8;
  double merge_threshold = 0.05;  // FH-style k constant
  int min_segment_size = 20;
  bool use_color = false;
  double color_weight = 0.2;
};

/// The point -> superpoint mapping. `labels` is the upsampling map phi:
/// contiguous values in [0, m), every segment nonempty, centroid = mean of
/// member positions.
struct SuperpointPartition {
  std::vector<int> labels;
  std::vector<int> segment_sizes;
  std::vector<Vec3> centroids;

  int segment_count() const { return static_cast<int>(segment_sizes.size()); }
  std::size_t point_count() const { return labels.size(); }
};

/// Graph-partition oversegmentation (Felzenszwalb-Huttenlocher) over the
/// k-NN graph. Edge weight is normal dissimilarity (1 - n_i . n_j) plus an
/// optional color term; edges are processed ascending with ties broken by
/// (lower i, lower j); segments below min_segment_size merge into their
/// lowest-weight-edge neighbor. Uses cloud normals, estimating them when
/// absent.
SuperpointPartition oversegment(const PointCloud& cloud, const OversegmentParams& params,
                                const NeighborGraph& graph);

/// Renumber labels to [0, m) by order of first occurrence. Idempotent.
/// Sizes are recomputed; centroids are carried over when the input provides
/// them for every referenced label, otherwise left empty.
SuperpointPartition compactify(const SuperpointPartition& partition);

/// Build a full partition (compact labels, sizes, centroids) from a raw
/// label array over `cloud`.
SuperpointPartition partition_from_labels(const std::vector<int>& labels,
                                          const PointCloud& cloud);

}  // namespace spg
