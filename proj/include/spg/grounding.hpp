#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "spg/geometry.hpp"
#include "spg/oversegment.hpp"

namespace spg {

/// Low-resolution visual tokens V: n positions plus an n x d feature matrix.
struct TokenSet {
  std::vector<Vec3> positions;
  Eigen::MatrixXd features;

  std::size_t count() const { return positions.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
};

/// Object candidates: k query embeddings Q (k x d), axis-aligned boxes B
/// (center + size), and per-query referring scores s.
struct QuerySet {
  Eigen::MatrixXd embeddings;
  std::vector<Box6> boxes;
  Eigen::VectorXd scores;

  std::size_t count() const { return boxes.size(); }
};

/// Two affine layers with a rectifier between them, hidden width = d.
struct Mlp {
  Eigen::MatrixXd w1, w2;  // d x d
  Eigen::VectorXd b1, b2;  // d

  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
};

/// One MLP for the visual/superpoint side, one for the query side.
struct MlpParams {
  Mlp visual;
  Mlp query;

  int dim() const { return static_cast<int>(visual.w1.rows()); }
  bool finite() const;
  bool well_formed() const;  // square d x d weights, d-sized biases

  static MlpParams identity(int dim);
  static MlpParams seeded(int dim, std::uint64_t seed);
};

/// Superpoint mask M_s in [0,1]^{m x k}; full_mask is its phi-upsampled
/// point-resolution form M_0 in [0,1]^{N x k}. A branch that predicts only
/// one of the two leaves the other empty.
struct MaskPrediction {
  Eigen::MatrixXd superpoint_mask;
  std::optional<Eigen::MatrixXd> full_mask;
};

/// Deterministic stand-in for the encoder lane: positions by farthest-point
/// sampling, features by a seeded affine map of (position, color) max-pooled
/// over a ball-query neighborhood (radius 0.2, 8 samples).
TokenSet produce_tokens(const PointCloud& cloud, std::size_t n, int d, std::uint64_t seed);

/// Deterministic stand-in for learned query selection: a seeded scoring
/// projection of token features, top-k by score (ties by lower index),
/// boxes initialized as 0.5 m cubes at the selected positions.
QuerySet select_queries(const TokenSet& tokens, std::size_t k, std::uint64_t seed);

/// Superpoint embeddings V_s (m x d): ball-query the token positions around
/// each superpoint centroid and max-pool the gathered features.
Eigen::MatrixXd superpoint_embeddings(const TokenSet& tokens, const SuperpointPartition& partition,
                                      double radius = 0.2, int samples = 2);

/// M_s = sigmoid( MLP_v(V_s) . MLP_q(Q)^T ).
MaskPrediction predict_masks(const Eigen::MatrixXd& v_s, const QuerySet& queries,
                             const MlpParams& params);

/// Populate M_0 by the mapping phi: full_mask(i, q) = superpoint_mask(labels[i], q).
MaskPrediction upsample_mask(const MaskPrediction& mask, const SuperpointPartition& partition);

/// Dense reference branch: per-point features by 3-nearest-token inverse
/// distance interpolation, then the same MLP / dot-product / sigmoid head at
/// full resolution. Produces full_mask only.
MaskPrediction dense_mask_baseline(const TokenSet& tokens, const PointCloud& cloud,
                                   const QuerySet& queries, const MlpParams& params);

struct Referent {
  std::vector<std::uint8_t> mask;  // per point, 0/1
  Box6 box;
  int query_index;
  double score;
};

/// Pick the query with the highest referring score (ties by lower index) and
/// binarize its full-resolution mask column at `threshold`.
Referent select_referent(const MaskPrediction& mask, const QuerySet& queries,
                         double threshold = 0.5);

}  // namespace spg
