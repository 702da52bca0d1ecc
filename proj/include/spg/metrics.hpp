#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spg/geometry.hpp"

namespace spg {

/// "unique" when the referent is the only instance of its class in the
/// scene, "multiple" otherwise.
enum class Category { kUnique, kMultiple };

struct EvalSample {
  std::vector<std::uint8_t> pred_mask;
  std::vector<std::uint8_t> gt_mask;
  Box6 pred_box;
  Box6 gt_box;
  Category category;
};

struct StratumReport {
  std::size_t count = 0;
  std::vector<double> acc;  // one entry per threshold, fractions in [0,1]
  double miou = 0.0;
};

struct EvalReport {
  std::vector<double> thresholds;
  StratumReport overall;
  StratumReport unique;
  StratumReport multiple;
};

/// Intersection volume / union volume of two axis-aligned boxes.
double box_iou_3d(const Box6& a, const Box6& b);

/// |pred AND gt| / |pred OR gt|; defined as 1.0 when both masks are empty.
double mask_iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

/// Acc@t = fraction of samples whose box IoU reaches t; mIoU = mean mask
/// IoU over samples. Reported overall and per category. An absent category
/// reports zeros with count 0.
EvalReport evaluate(std::span<const EvalSample> samples, std::span<const double> thresholds);

}  // namespace spg
