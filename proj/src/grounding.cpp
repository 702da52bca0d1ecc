#include "spg/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "spg/rng.hpp"

namespace spg {

namespace {

constexpr std::uint64_t kTokenFeatureSalt = 0x746f6b656e736571ULL;
constexpr std::uint64_t kQueryScoreSalt = 0x71756572797363ULL;
constexpr std::uint64_t kMlpSalt = 0x6d6c70706172616dULL;

Eigen::MatrixXd seeded_matrix(std::mt19937_64& gen, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * symmetric_uniform(gen);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Eigen::MatrixXd Mlp::apply(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd hidden = rows * w1;
  hidden.rowwise() += b1.transpose();
  hidden = hidden.cwiseMax(0.0);
  Eigen::MatrixXd out = hidden * w2;
  out.rowwise() += b2.transpose();
  return out;
}

bool MlpParams::finite() const {
  const auto ok = [](const Mlp& m) {
    return m.w1.allFinite() && m.w2.allFinite() && m.b1.allFinite() && m.b2.allFinite();
  };
  return ok(visual) && ok(query);
}

bool MlpParams::well_formed() const {
  const Eigen::Index d = visual.w1.rows();
  const auto square = [d](const Mlp& m) {
    return m.w1.rows() == d && m.w1.cols() == d && m.w2.rows() == d && m.w2.cols() == d &&
           m.b1.size() == d && m.b2.size() == d;
  };
  return d >= 1 && square(visual) && square(query);
}

MlpParams MlpParams::identity(int dim) {
  Mlp layer;
  layer.w1 = Eigen::MatrixXd::Identity(dim, dim);
  layer.w2 = Eigen::MatrixXd::Identity(dim, dim);
  layer.b1 = Eigen::VectorXd::Zero(dim);
  layer.b2 = Eigen::VectorXd::Zero(dim);
  return {layer, layer};
}

MlpParams MlpParams::seeded(int dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed ^ kMlpSalt);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  const auto make = [&] {
    Mlp layer;
    layer.w1 = seeded_matrix(gen, dim, dim, scale);
    layer.w2 = seeded_matrix(gen, dim, dim, scale);
    layer.b1 = seeded_matrix(gen, dim, 1, 0.1);
    layer.b2 = seeded_matrix(gen, dim, 1, 0.1);
    return layer;
  };
  MlpParams params;
  params.visual = make();
  params.query = make();
  return params;
}

TokenSet produce_tokens(const PointCloud& cloud, std::size_t n, int d, std::uint64_t seed) {
  cloud.validate();
  if (d < 1) throw std::invalid_argument("feature dimension must be at least 1");
  const std::vector<int> picks = fps_sample(cloud, n, seed);

  // Pointwise base features: a fixed seeded affine map of (position, color).
  // The map depends only on the seed, never on point order, which is what
  // makes the pooled tokens permutation-invariant.
  std::mt19937_64 gen(seed ^ kTokenFeatureSalt);
  const Eigen::MatrixXd weight = seeded_matrix(gen, 6, d, 1.0);
  const Eigen::MatrixXd bias = seeded_matrix(gen, 1, d, 1.0);

  const std::size_t total = cloud.size();
  Eigen::MatrixXd base(total, d);
  Eigen::RowVectorXd input(6);
  for (std::size_t i = 0; i < total; ++i) {
    input << cloud.positions[i].transpose(), cloud.colors[i].transpose();
    base.row(i) = input * weight + bias;
  }

  TokenSet tokens;
  tokens.positions.reserve(n);
  for (int idx : picks) tokens.positions.push_back(cloud.positions[idx]);

  const BallQueryResult groups = ball_query(tokens.positions, cloud.positions, 0.2, 8);
  tokens.features.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t t = 0; t < n; ++t) {
    Eigen::RowVectorXd pooled =
        Eigen::RowVectorXd::Constant(d, -std::numeric_limits<double>::infinity());
    for (int idx : groups.row(t)) pooled = pooled.cwiseMax(base.row(idx));
    tokens.features.row(static_cast<Eigen::Index>(t)) = pooled;
  }
  return tokens;
}

QuerySet select_queries(const TokenSet& tokens, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > tokens.count()) throw std::invalid_argument("k exceeds token count");

  std::mt19937_64 gen(seed ^ kQueryScoreSalt);
  const Eigen::VectorXd scorer = seeded_matrix(gen, tokens.dim(), 1, 1.0);
  const Eigen::VectorXd raw = tokens.features * scorer;

  std::vector<int> order(tokens.count());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (raw(a) != raw(b)) return raw(a) > raw(b);
    return a < b;
  });

  QuerySet queries;
  queries.embeddings.resize(static_cast<Eigen::Index>(k), tokens.dim());
  queries.scores.resize(static_cast<Eigen::Index>(k));
  queries.boxes.reserve(k);
  for (std::size_t q = 0; q < k; ++q) {
    const int src = order[q];
    queries.embeddings.row(static_cast<Eigen::Index>(q)) = tokens.features.row(src);
    queries.scores(static_cast<Eigen::Index>(q)) = raw(src);
    const Vec3& p = tokens.positions[src];
    queries.boxes.push_back({p.x(), p.y(), p.z(), 0.5, 0.5, 0.5});
  }
  return queries;
}

Eigen::MatrixXd superpoint_embeddings(const TokenSet& tokens, const SuperpointPartition& partition,
                                      double radius, int samples) {
  const BallQueryResult groups =
      ball_query(partition.centroids, tokens.positions, radius, samples);

  Eigen::MatrixXd v_s(partition.segment_count(), tokens.dim());
  for (int j = 0; j < partition.segment_count(); ++j) {
    Eigen::RowVectorXd pooled =
        Eigen::RowVectorXd::Constant(tokens.dim(), -std::numeric_limits<double>::infinity());
    for (int idx : groups.row(j)) pooled = pooled.cwiseMax(tokens.features.row(idx));
    v_s.row(j) = pooled;
  }
  return v_s;
}

MaskPrediction predict_masks(const Eigen::MatrixXd& v_s, const QuerySet& queries,
                             const MlpParams& params) {
  if (!params.finite()) throw std::invalid_argument("non-finite parameters");
  if (!params.well_formed() || v_s.cols() != params.dim() ||
      queries.embeddings.cols() != params.dim())
    throw std::invalid_argument("dimension mismatch");

  const Eigen::MatrixXd logits =
      params.visual.apply(v_s) * params.query.apply(queries.embeddings).transpose();

  MaskPrediction prediction;
  prediction.superpoint_mask = logits.unaryExpr([](double x) { return sigmoid(x); });
  return prediction;
}

MaskPrediction upsample_mask(const MaskPrediction& mask, const SuperpointPartition& partition) {
  if (mask.superpoint_mask.rows() != partition.segment_count())
    throw std::invalid_argument("dimension mismatch");

  MaskPrediction out;
  out.superpoint_mask = mask.superpoint_mask;
  Eigen::MatrixXd full(partition.point_count(), mask.superpoint_mask.cols());
  for (std::size_t i = 0; i < partition.point_count(); ++i)
    full.row(static_cast<Eigen::Index>(i)) = mask.superpoint_mask.row(partition.labels[i]);
  out.full_mask = std::move(full);
  return out;
}

MaskPrediction dense_mask_baseline(const TokenSet& tokens, const PointCloud& cloud,
                                   const QuerySet& queries, const MlpParams& params) {
  if (!params.finite()) throw std::invalid_argument("non-finite parameters");
  if (!params.well_formed() || tokens.dim() != params.dim() ||
      queries.embeddings.cols() != params.dim())
    throw std::invalid_argument("dimension mismatch");

  const int k_interp = static_cast<int>(std::min<std::size_t>(3, tokens.count()));
  KdTree tree(tokens.positions);

  Eigen::MatrixXd point_features(cloud.size(), tokens.dim());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::vector<Neighbor> near = tree.nearest(cloud.positions[i], k_interp);
    double weights[3];
    double sum = 0.0;
    for (int j = 0; j < k_interp; ++j) {
      weights[j] = 1.0 / (std::sqrt(near[j].dist_sq) + 1e-8);
      sum += weights[j];
    }
    Eigen::RowVectorXd feature = Eigen::RowVectorXd::Zero(tokens.dim());
    for (int j = 0; j < k_interp; ++j)
      feature += (weights[j] / sum) * tokens.features.row(near[j].index);
    point_features.row(static_cast<Eigen::Index>(i)) = feature;
  }

  const Eigen::MatrixXd logits =
      params.visual.apply(point_features) * params.query.apply(queries.embeddings).transpose();

  MaskPrediction prediction;
  prediction.full_mask = logits.unaryExpr([](double x) { return sigmoid(x); });
  return prediction;
}

Referent select_referent(const MaskPrediction& mask, const QuerySet& queries, double threshold) {
  if (!mask.full_mask.has_value()) throw std::invalid_argument("full mask not populated");
  if (threshold <= 0.0 || threshold >= 1.0)
    throw std::invalid_argument("threshold must lie in (0,1)");
  if (mask.full_mask->cols() != static_cast<Eigen::Index>(queries.count()))
    throw std::invalid_argument("dimension mismatch");

  int best = 0;
  for (Eigen::Index q = 1; q < queries.scores.size(); ++q)
    if (queries.scores(q) > queries.scores(best)) best = static_cast<int>(q);

  Referent referent;
  referent.query_index = best;
  referent.score = queries.scores(best);
  referent.box = queries.boxes[best];
  referent.mask.resize(mask.full_mask->rows());
  for (Eigen::Index i = 0; i < mask.full_mask->rows(); ++i)
    referent.mask[i] = (*mask.full_mask)(i, best) >= threshold ? 1 : 0;
  return referent;
}

}  // namespace spg
