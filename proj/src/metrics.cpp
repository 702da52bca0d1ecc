#include "spg/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace spg {

double box_iou_3d(const Box6& a, const Box6& b) {
  double inter = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (a[3 + axis] <= 0.0 || b[3 + axis] <= 0.0)
      throw std::invalid_argument("non-positive box size");
    const double lo = std::max(a[axis] - 0.5 * a[3 + axis], b[axis] - 0.5 * b[3 + axis]);
    const double hi = std::min(a[axis] + 0.5 * a[3 + axis], b[axis] + 0.5 * b[3 + axis]);
    inter *= std::max(0.0, hi - lo);
  }
  const double vol_a = a[3] * a[4] * a[5];
  const double vol_b = b[3] * b[4] * b[5];
  return inter / (vol_a + vol_b - inter);
}

double mask_iou(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("length mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    inter += p && g;
    uni += p || g;
  }
  if (uni == 0) return 1.0;  // both empty: perfect agreement by convention
  return static_cast<double>(inter) / static_cast<double>(uni);
}

EvalReport evaluate(std::span<const EvalSample> samples, std::span<const double> thresholds) {
  if (samples.empty()) throw std::invalid_argument("empty sample list");
  for (double t : thresholds)
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("threshold outside (0,1)");

  EvalReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());

  struct Accum {
    std::size_t count = 0;
    std::vector<std::size_t> hits;
    double iou_sum = 0.0;
  };
  Accum overall, unique, multiple;
  overall.hits.assign(thresholds.size(), 0);
  unique.hits.assign(thresholds.size(), 0);
  multiple.hits.assign(thresholds.size(), 0);

  for (const EvalSample& sample : samples) {
    const double biou = box_iou_3d(sample.pred_box, sample.gt_box);
    const double miou = mask_iou(sample.pred_mask, sample.gt_mask);
    Accum& stratum = sample.category == Category::kUnique ? unique : multiple;
    for (Accum* acc : {&overall, &stratum}) {
      ++acc->count;
      acc->iou_sum += miou;
      for (std::size_t t = 0; t < thresholds.size(); ++t)
        if (biou >= thresholds[t]) ++acc->hits[t];
    }
  }

  const auto finish = [&](const Accum& acc) {
    StratumReport stratum;
    stratum.count = acc.count;
    stratum.acc.assign(thresholds.size(), 0.0);
    if (acc.count > 0) {
      for (std::size_t t = 0; t < thresholds.size(); ++t)
        stratum.acc[t] = static_cast<double>(acc.hits[t]) / static_cast<double>(acc.count);
      stratum.miou = acc.iou_sum / static_cast<double>(acc.count);
    }
    return stratum;
  };
  report.overall = finish(overall);
  report.unique = finish(unique);
  report.multiple = finish(multiple);
  return report;
}

}  // namespace spg
