#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spg/geometry.hpp"

namespace spg {

/// Weighted-sum coefficients for the decoder-layer combination (beta) and
/// the task-level combination (alpha), plus the decoder depth L.
struct LossWeights {
  std::array<double, 4> alpha;  // rec, focal, dice, kps
  std::array<double, 5> beta;   // coord, size, giou, sem, pos
  int num_decoder_layers;

  /// Stock weights: alpha = (1/(L+1), 10, 2, 8), beta = (5, 1, 1, 0.5, 0.5),
  /// L = 6. The sem/pos/kps slots weight terms that default to zero here.
  static LossWeights defaults();
};

struct LossValueGrad {
  double value = 0.0;
  std::vector<double> grad;  // same layout as the prediction argument
};

/// Elementwise smooth-L1 (quadratic below `beta`, linear above), averaged
/// over elements. Used for both box-center and box-size regression.
LossValueGrad smooth_l1(std::span<const double> pred, std::span<const double> target,
                        double beta = 1.0);

/// 1 - GIoU for axis-aligned 3D boxes (center + size). GIoU = IoU -
/// (|C| - |A u B|)/|C| with C the smallest enclosing axis-aligned box.
/// Gradient w.r.t. the predicted box; subgradient 0 at degenerate ties.
LossValueGrad giou_loss_3d(const Box6& pred_box, const Box6& gt_box);

/// Mean of -alpha_t (1 - p_t)^gamma log(p_t) over elements.
LossValueGrad focal_loss(std::span<const double> probs, std::span<const std::uint8_t> targets,
                         double alpha_bal = 0.25, double gamma = 2.0);

/// 1 - (2 sum(p y) + smooth) / (sum p + sum y + smooth).
LossValueGrad dice_loss(std::span<const double> probs, std::span<const std::uint8_t> targets,
                        double smooth = 1.0);

/// Per-layer decoder loss: beta-weighted sum of
/// (coord, size, giou, sem, pos) terms.
double combine_decoder_loss(const std::array<double, 5>& terms, const LossWeights& weights);

/// Total loss: alpha1 * mean(per-layer decoder losses) + alpha2 * focal +
/// alpha3 * dice + alpha4 * kps.
double total_loss(std::span<const double> per_layer_dec, double focal, double dice, double kps,
                  const LossWeights& weights);

using LossOp = std::function<LossValueGrad(std::span<const double>)>;

/// Central finite differences against the analytic gradient. Returns the max
/// over coordinates of |fd - analytic| / max(1, |analytic|). The point must
/// sit at least ~10*epsilon away from any non-smooth kink.
double finite_difference_check(const LossOp& op, std::span<const double> point,
                               double epsilon = 1e-5);

struct GradCheckEntry {
  std::string loss;
  double max_rel_error;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance;
  bool passed() const;
};

/// Run finite_difference_check for every loss at `trials` random smooth
/// points each, against `tolerance` (default 1e-4).
GradCheckReport run_gradient_suite(int trials, double epsilon = 1e-5, double tolerance = 1e-4,
                                   std::uint64_t seed = 1);

}  // namespace spg
