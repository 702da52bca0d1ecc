#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "spg/grounding.hpp"
#include "spg/oversegment.hpp"

namespace spg {

enum class ExecMode { kParallel, kSerial };

const char* to_string(ExecMode mode);

/// Optional injected sleeps that stand in for the real encoder/decoder
/// latencies, making wall-clock structure reproducible on any host.
struct SyntheticDelays {
  double lane_a_ms = 0.0;  // superpoint lane
  double lane_b_ms = 0.0;  // token lane
  double tail_ms = 0.0;    // post-join mask head
};

struct PipelineConfig {
  int n = 1024;  // visual tokens
  int d = 32;    // feature dimension
  int k = 256;   // object queries
  double radius = 0.2;
  int samples = 2;
  OversegmentParams oversegment;
  std::uint64_t seed = 0;
  std::optional<SyntheticDelays> delays;
  ExecMode mode = ExecMode::kParallel;
  double mask_threshold = 0.5;
};

/// Wall-clock milliseconds per stage. lane_a covers oversegmentation,
/// lane_b token/query production, tail everything after the join.
struct TimingReport {
  double lane_a_ms = 0.0;
  double lane_b_ms = 0.0;
  double tail_ms = 0.0;
  double total_ms = 0.0;
  ExecMode mode = ExecMode::kParallel;

  std::string to_text() const;  // one "key value" line per field
  std::string to_json() const;  // {"lane_a_ms": ..., ..., "mode": ...}
};

struct PipelineResult {
  Referent referent;
  Eigen::MatrixXd superpoint_mask;  // M_s
  Eigen::MatrixXd full_mask;        // M_0
  SuperpointPartition partition;
  QuerySet queries;
  TimingReport timing;
};

/// The two-lane executor: lane A oversegments on one thread while lane B
/// produces tokens and queries on another; the join computes superpoint
/// embeddings, masks, the phi upsample, and the referent. Serial mode runs
/// the same stages back to back. Numerical outputs are bit-identical across
/// modes.
PipelineResult run_pipeline(const PointCloud& cloud, const PipelineConfig& config);

struct BenchStats {
  TimingReport median;
  TimingReport p95;
  /// (total - tail) / max(lane_a, lane_b), median across repetitions; ~1.0
  /// means the join added no latency beyond the slower lane.
  double overhead_ratio = 0.0;
  int repetitions = 0;
};

/// Run the pipeline `repetitions` times on one internally generated scene
/// and aggregate the timing reports.
BenchStats bench(const PipelineConfig& config, int repetitions);

/// Analytic floating-op counts for the superpoint branch versus the dense
/// baseline at the given sizes. The model charges 8 flops per distance
/// evaluation, 2 per multiply-add, 4 per sigmoid, and 1 per pooled/copied
/// element; neighbor searches are charged at their exhaustive-equivalent
/// cost so the comparison does not depend on indexing tricks.
struct FlopsReport {
  double sp_ball_query = 0.0;
  double sp_pool = 0.0;
  double sp_mlp = 0.0;
  double sp_mask_product = 0.0;
  double sp_sigmoid = 0.0;
  double sp_upsample = 0.0;

  double dn_neighbor_search = 0.0;
  double dn_interpolate = 0.0;
  double dn_mlp = 0.0;
  double dn_mask_product = 0.0;
  double dn_sigmoid = 0.0;

  double superpoint_total() const;
  double dense_total() const;
  double ratio() const { return dense_total() / superpoint_total(); }
};

FlopsReport flops_report(const PipelineConfig& config, std::int64_t point_count,
                         std::int64_t superpoint_count);

}  // namespace spg
