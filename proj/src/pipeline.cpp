#include "spg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <future>
#include <stdexcept>
#include <thread>
#include <vector>

#include "json.hpp"
#include "spg/synthetic.hpp"

namespace spg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void sleep_ms(double ms) {
  if (ms > 0.0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

struct LaneAOutput {
  SuperpointPartition partition;
  double elapsed_ms;
};

struct LaneBOutput {
  TokenSet tokens;
  QuerySet queries;
  double elapsed_ms;
};

LaneAOutput run_lane_a(const PointCloud& cloud, const PipelineConfig& config) {
  const auto start = Clock::now();
  if (config.delays) sleep_ms(config.delays->lane_a_ms);
  const NeighborGraph graph = build_knn_graph(cloud, config.oversegment.k_nn);
  SuperpointPartition partition = oversegment(cloud, config.oversegment, graph);
  return {std::move(partition), ms_since(start)};
}

LaneBOutput run_lane_b(const PointCloud& cloud, const PipelineConfig& config) {
  const auto start = Clock::now();
  if (config.delays) sleep_ms(config.delays->lane_b_ms);
  TokenSet tokens = produce_tokens(cloud, static_cast<std::size_t>(config.n), config.d,
                                   config.seed);
  QuerySet queries = select_queries(tokens, static_cast<std::size_t>(config.k), config.seed);
  return {std::move(tokens), std::move(queries), ms_since(start)};
}

}  // namespace

const char* to_string(ExecMode mode) {
  return mode == ExecMode::kParallel ? "parallel" : "serial";
}

std::string TimingReport::to_text() const {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer),
                "lane_a_ms %.6g\nlane_b_ms %.6g\ntail_ms %.6g\ntotal_ms %.6g\nmode %s\n",
                lane_a_ms, lane_b_ms, tail_ms, total_ms, to_string(mode));
  return buffer;
}

std::string TimingReport::to_json() const {
  nlohmann::json j{{"lane_a_ms", lane_a_ms},
                   {"lane_b_ms", lane_b_ms},
                   {"tail_ms", tail_ms},
                   {"total_ms", total_ms},
                   {"mode", to_string(mode)}};
  return j.dump();
}

PipelineResult run_pipeline(const PointCloud& cloud, const PipelineConfig& config) {
  if (config.n < 1 || config.d < 1 || config.k < 1)
    throw std::invalid_argument("counts must be positive");
  if (static_cast<std::size_t>(config.n) > cloud.size())
    throw std::invalid_argument("sample larger than population");

  const auto start = Clock::now();
  LaneAOutput lane_a;
  LaneBOutput lane_b;
  if (config.mode == ExecMode::kParallel) {
    auto future_a = std::async(std::launch::async, run_lane_a, std::cref(cloud),
                               std::cref(config));
    auto future_b = std::async(std::launch::async, run_lane_b, std::cref(cloud),
                               std::cref(config));
    lane_a = future_a.get();
    lane_b = future_b.get();
  } else {
    lane_a = run_lane_a(cloud, config);
    lane_b = run_lane_b(cloud, config);
  }

  const auto join_start = Clock::now();
  if (config.delays) sleep_ms(config.delays->tail_ms);
  const Eigen::MatrixXd v_s =
      superpoint_embeddings(lane_b.tokens, lane_a.partition, config.radius, config.samples);
  const MlpParams params = MlpParams::seeded(config.d, config.seed);
  MaskPrediction masks = predict_masks(v_s, lane_b.queries, params);
  masks = upsample_mask(masks, lane_a.partition);
  Referent referent = select_referent(masks, lane_b.queries, config.mask_threshold);

  PipelineResult result;
  result.timing.tail_ms = ms_since(join_start);
  result.timing.total_ms = ms_since(start);
  result.timing.lane_a_ms = lane_a.elapsed_ms;
  result.timing.lane_b_ms = lane_b.elapsed_ms;
  result.timing.mode = config.mode;
  result.referent = std::move(referent);
  result.superpoint_mask = std::move(masks.superpoint_mask);
  result.full_mask = std::move(*masks.full_mask);
  result.partition = std::move(lane_a.partition);
  result.queries = std::move(lane_b.queries);
  return result;
}

namespace {

double percentile(std::vector<double> values, double fraction) {
  std::sort(values.begin(), values.end());
  if (values.empty()) return 0.0;
  if (fraction >= 1.0) return values.back();
  const std::size_t n = values.size();
  if (fraction == 0.5 && n % 2 == 0) return 0.5 * (values[n / 2 - 1] + values[n / 2]);
  const std::size_t rank = static_cast<std::size_t>(fraction * static_cast<double>(n));
  return values[std::min(rank, n - 1)];
}

}  // namespace

BenchStats bench(const PipelineConfig& config, int repetitions) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");

  const std::size_t scene_points =
      std::max<std::size_t>(2000, 2 * static_cast<std::size_t>(config.n));
  const PointCloud cloud = make_synthetic_scene(scene_points, config.seed);

  std::vector<double> lane_a, lane_b, tail, total, ratio;
  for (int rep = 0; rep < repetitions; ++rep) {
    const TimingReport t = run_pipeline(cloud, config).timing;
    lane_a.push_back(t.lane_a_ms);
    lane_b.push_back(t.lane_b_ms);
    tail.push_back(t.tail_ms);
    total.push_back(t.total_ms);
    ratio.push_back((t.total_ms - t.tail_ms) / std::max(t.lane_a_ms, t.lane_b_ms));
  }

  BenchStats stats;
  stats.repetitions = repetitions;
  stats.median = {percentile(lane_a, 0.5), percentile(lane_b, 0.5), percentile(tail, 0.5),
                  percentile(total, 0.5), config.mode};
  stats.p95 = {percentile(lane_a, 0.95), percentile(lane_b, 0.95), percentile(tail, 0.95),
               percentile(total, 0.95), config.mode};
  stats.overhead_ratio = percentile(ratio, 0.5);
  return stats;
}

double FlopsReport::superpoint_total() const {
  return sp_ball_query + sp_pool + sp_mlp + sp_mask_product + sp_sigmoid + sp_upsample;
}

double FlopsReport::dense_total() const {
  return dn_neighbor_search + dn_interpolate + dn_mlp + dn_mask_product + dn_sigmoid;
}

FlopsReport flops_report(const PipelineConfig& config, std::int64_t point_count,
                         std::int64_t superpoint_count) {
  const double N = static_cast<double>(point_count);
  const double n = static_cast<double>(config.n);
  const double d = static_cast<double>(config.d);
  const double k = static_cast<double>(config.k);
  const double m = static_cast<double>(superpoint_count);
  const double samples = static_cast<double>(config.samples);

  constexpr double kDistance = 8.0;  // 3 subs, 3 mults, 2 adds
  const auto mlp = [d](double rows) { return rows * (4.0 * d * d + 3.0 * d); };

  FlopsReport report;
  report.sp_ball_query = m * n * kDistance;
  report.sp_pool = m * samples * d;
  report.sp_mlp = mlp(m) + mlp(k);
  report.sp_mask_product = 2.0 * m * d * k;
  report.sp_sigmoid = 4.0 * m * k;
  report.sp_upsample = N * k;

  report.dn_neighbor_search = N * n * kDistance;
  report.dn_interpolate = N * (6.0 * d + 12.0);
  report.dn_mlp = mlp(N) + mlp(k);
  report.dn_mask_product = 2.0 * N * d * k;
  report.dn_sigmoid = 4.0 * N * k;
  return report;
}

}  // namespace spg
