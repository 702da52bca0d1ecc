#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spg/grounding.hpp"
#include "spg/io.hpp"
#include "spg/losses.hpp"
#include "spg/metrics.hpp"
#include "spg/oversegment.hpp"
#include "spg/pipeline.hpp"
#include "spg/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// SPG_SEED wins over --seed when set; a malformed value is a usage error.
std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("SPG_SEED");
  if (raw == nullptr) return std::nullopt;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0')
    throw CLI::ValidationError("SPG_SEED", "SPG_SEED is not an integer");
  return value;
}

void emit(std::ostream& out, const std::string& text) { out << text; }

int run_oversegment(const std::string& scene_path, const spg::OversegmentParams& params,
                    const std::string& output) {
  const spg::PointCloud cloud = spg::parse_scene(scene_path);
  const spg::NeighborGraph graph = spg::build_knn_graph(cloud, params.k_nn);
  const spg::SuperpointPartition partition = spg::oversegment(cloud, params, graph);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!output.empty()) {
    file.open(output);
    if (!file) throw std::runtime_error("cannot open " + output);
    out = &file;
  }
  *out << "segments " << partition.segment_count() << '\n';
  for (int label : partition.labels) *out << label << '\n';
  return 0;
}

int run_infer(const std::string& scene_path, spg::PipelineConfig config, bool dense_baseline,
              const std::string& output) {
  const spg::PointCloud cloud = spg::parse_scene(scene_path);

  spg::Prediction prediction;
  spg::TimingReport timing;
  if (dense_baseline) {
    // Single-lane reference path: tokens, queries, dense masks.
    const auto start = Clock::now();
    const spg::TokenSet tokens =
        spg::produce_tokens(cloud, static_cast<std::size_t>(config.n), config.d, config.seed);
    const spg::QuerySet queries =
        spg::select_queries(tokens, static_cast<std::size_t>(config.k), config.seed);
    timing.lane_b_ms = ms_since(start);

    const auto mask_start = Clock::now();
    const spg::MlpParams params = spg::MlpParams::seeded(config.d, config.seed);
    const spg::MaskPrediction masks = spg::dense_mask_baseline(tokens, cloud, queries, params);
    const spg::Referent referent =
        spg::select_referent(masks, queries, config.mask_threshold);
    timing.tail_ms = ms_since(mask_start);
    timing.total_ms = ms_since(start);
    timing.mode = spg::ExecMode::kSerial;

    prediction = {referent.mask, referent.box, referent.score};
  } else {
    spg::PipelineResult result = spg::run_pipeline(cloud, config);
    timing = result.timing;
    prediction = {result.referent.mask, result.referent.box, result.referent.score};
  }

  spg::write_prediction(output, prediction);
  emit(std::cout, timing.to_text());
  emit(std::cout, timing.to_json() + "\n");
  return 0;
}

int run_eval(const std::string& pred_dir, const std::string& gt_path,
             const std::vector<double>& thresholds) {
  const spg::GroundTruthFile gt = spg::parse_ground_truth(gt_path);

  std::vector<spg::EvalSample> samples;
  samples.reserve(gt.records.size());
  for (const spg::GroundTruthRecord& record : gt.records) {
    const std::filesystem::path pred_path =
        std::filesystem::path(pred_dir) / (record.id + ".pred");
    const spg::Prediction prediction = spg::parse_prediction(pred_path);
    if (prediction.mask.size() != gt.point_count)
      throw std::runtime_error("prediction mask for '" + record.id + "' covers " +
                               std::to_string(prediction.mask.size()) + " points, expected " +
                               std::to_string(gt.point_count));
    spg::EvalSample sample;
    sample.pred_mask = prediction.mask;
    sample.pred_box = prediction.box;
    sample.gt_mask = record.mask;
    sample.gt_box = record.box;
    sample.category = record.category;
    samples.push_back(std::move(sample));
  }

  const spg::EvalReport report = spg::evaluate(samples, thresholds);

  // Stratum groups over Acc@t columns, overall mIoU last; values in percent.
  const int cell = 10;
  const int group = cell * static_cast<int>(thresholds.size());
  char header[64];
  std::printf("%-12s", "");
  std::snprintf(header, sizeof(header), "Unique(%.0f%%)",
                100.0 * static_cast<double>(report.unique.count) /
                    static_cast<double>(report.overall.count));
  std::printf("%-*s", group, header);
  std::snprintf(header, sizeof(header), "Multiple(%.0f%%)",
                100.0 * static_cast<double>(report.multiple.count) /
                    static_cast<double>(report.overall.count));
  std::printf("%-*s", group, header);
  std::printf("%-*s\n", group, "Overall");

  std::printf("%-12s", "");
  for (int rep = 0; rep < 3; ++rep)
    for (double t : report.thresholds) {
      std::snprintf(header, sizeof(header), "Acc@%.6g", t);
      std::printf("%-*s", cell, header);
    }
  std::printf("%s\n", "mIoU");

  std::printf("%-12s", std::filesystem::path(pred_dir).filename().string().c_str());
  for (const spg::StratumReport* stratum :
       {&report.unique, &report.multiple, &report.overall})
    for (std::size_t t = 0; t < report.thresholds.size(); ++t)
      std::printf("%-*.1f", cell, 100.0 * stratum->acc[t]);
  std::printf("%.1f\n", 100.0 * report.overall.miou);

  std::printf("mIoU unique %.1f multiple %.1f overall %.1f\n", 100.0 * report.unique.miou,
              100.0 * report.multiple.miou, 100.0 * report.overall.miou);
  return 0;
}

int run_bench(spg::PipelineConfig config, int reps) {
  for (const spg::ExecMode mode : {spg::ExecMode::kParallel, spg::ExecMode::kSerial}) {
    config.mode = mode;
    const spg::BenchStats stats = spg::bench(config, reps);
    std::printf("%s over %d reps\n", spg::to_string(mode), stats.repetitions);
    std::printf("median:\n%s", stats.median.to_text().c_str());
    std::printf("p95:\n%s", stats.p95.to_text().c_str());
    if (mode == spg::ExecMode::kParallel)
      std::printf("parallel_overhead_ratio %.6g\n", stats.overhead_ratio);
    std::printf("%s\n", stats.median.to_json().c_str());
  }
  return 0;
}

int run_gradcheck(double eps, int trials) {
  const spg::GradCheckReport report = spg::run_gradient_suite(trials, eps);
  for (const spg::GradCheckEntry& entry : report.entries)
    std::printf("%-14s max_rel_error %.3e tolerance %.0e %s\n", entry.loss.c_str(),
                entry.max_rel_error, report.tolerance,
                entry.max_rel_error < report.tolerance ? "ok" : "FAIL");
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"superpoint grounding toolkit"};
  app.require_subcommand(1);

  // oversegment
  auto* cmd_oversegment = app.add_subcommand("oversegment", "emit superpoint labels for a scene");
  std::string scene_path;
  spg::OversegmentParams overseg;
  std::string overseg_output;
  cmd_oversegment->add_option("scene", scene_path, "scene file")->required();
  cmd_oversegment->add_option("--knn", overseg.k_nn, "k-NN graph degree");
  cmd_oversegment->add_option("--threshold", overseg.merge_threshold, "FH merge threshold");
  cmd_oversegment->add_option("--min-size", overseg.min_segment_size, "minimum segment size");
  cmd_oversegment->add_flag("--use-color", overseg.use_color, "add color term to edge weights");
  cmd_oversegment->add_option("--color-weight", overseg.color_weight, "color term weight");
  cmd_oversegment->add_option("-o,--output", overseg_output, "write labels here (default stdout)");

  // infer
  auto* cmd_infer = app.add_subcommand("infer", "run the mask pipeline on a scene");
  spg::PipelineConfig config;
  std::string infer_scene, mode_name = "parallel", infer_output = "pred.txt";
  bool dense_baseline = false;
  std::uint64_t seed = 0;
  cmd_infer->add_option("scene", infer_scene, "scene file")->required();
  cmd_infer->add_option("--tokens", config.n, "visual token count");
  cmd_infer->add_option("--queries", config.k, "object query count");
  cmd_infer->add_option("--dim", config.d, "feature dimension");
  cmd_infer->add_option("--radius", config.radius, "superpoint query radius");
  cmd_infer->add_option("--samples", config.samples, "superpoint query sample budget");
  cmd_infer->add_option("--seed", seed, "deterministic seed");
  cmd_infer->add_option("--mode", mode_name, "parallel|serial")
      ->check(CLI::IsMember({"parallel", "serial"}));
  cmd_infer->add_flag("--dense-baseline", dense_baseline, "use the dense reference branch");
  cmd_infer->add_option("--threshold", config.mask_threshold, "mask binarization threshold");
  cmd_infer->add_option("--knn", config.oversegment.k_nn, "k-NN graph degree");
  cmd_infer->add_option("--min-size", config.oversegment.min_segment_size,
                        "minimum segment size");
  cmd_infer->add_option("-o,--output", infer_output, "prediction file path");

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "score predictions against ground truth");
  std::string pred_dir, gt_path;
  std::vector<double> thresholds{0.25, 0.5};
  cmd_eval->add_option("pred-dir", pred_dir, "directory of <id>.pred files")->required();
  cmd_eval->add_option("gt-file", gt_path, "ground-truth file")->required();
  cmd_eval->add_option("--thresholds", thresholds, "IoU thresholds")->delimiter(',');

  // bench
  auto* cmd_bench = app.add_subcommand("bench", "timing statistics for both modes");
  std::vector<double> delays{180.0, 172.0, 36.0};
  int reps = 20;
  cmd_bench->add_option("--delays", delays, "lane_a,lane_b,tail injected delays (ms)")
      ->delimiter(',')
      ->expected(3);
  cmd_bench->add_option("--reps", reps, "repetitions per mode");
  cmd_bench->add_option("--seed", seed, "deterministic seed");
  cmd_bench->add_option("--tokens", config.n, "visual token count");
  cmd_bench->add_option("--queries", config.k, "object query count");
  cmd_bench->add_option("--dim", config.d, "feature dimension");

  // gradcheck
  auto* cmd_gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  double eps = 1e-5;
  int trials = 100;
  cmd_gradcheck->add_option("--eps", eps, "finite-difference step");
  cmd_gradcheck->add_option("--trials", trials, "random points per loss");

  try {
    app.parse(argc, argv);

    if (const auto forced = env_seed()) seed = *forced;
    config.seed = seed;
    config.mode = mode_name == "serial" ? spg::ExecMode::kSerial : spg::ExecMode::kParallel;

    if (cmd_oversegment->parsed()) return run_oversegment(scene_path, overseg, overseg_output);
    if (cmd_infer->parsed()) return run_infer(infer_scene, config, dense_baseline, infer_output);
    if (cmd_eval->parsed()) return run_eval(pred_dir, gt_path, thresholds);
    if (cmd_bench->parsed()) {
      config.delays = spg::SyntheticDelays{delays[0], delays[1], delays[2]};
      return run_bench(config, reps);
    }
    if (cmd_gradcheck->parsed()) return run_gradcheck(eps, trials);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << app.help() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
