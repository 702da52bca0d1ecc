#include "spg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spg/rng.hpp"

namespace spg {

LossWeights LossWeights::defaults() {
  LossWeights w;
  w.num_decoder_layers = 6;
  w.alpha = {1.0 / (w.num_decoder_layers + 1), 10.0, 2.0, 8.0};
  w.beta = {5.0, 1.0, 1.0, 0.5, 0.5};
  return w;
}

LossValueGrad smooth_l1(std::span<const double> pred, std::span<const double> target,
                        double beta) {
  if (pred.size() != target.size()) throw std::invalid_argument("shape mismatch");
  if (pred.empty()) throw std::invalid_argument("empty input");
  if (beta <= 0.0) throw std::invalid_argument("beta must be positive");

  const double inv_count = 1.0 / static_cast<double>(pred.size());
  LossValueGrad out;
  out.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred[i] - target[i];
    if (std::abs(diff) < beta) {
      out.value += 0.5 * diff * diff / beta;
      out.grad[i] = diff / beta * inv_count;
    } else {
      out.value += std::abs(diff) - 0.5 * beta;
      out.grad[i] = (diff > 0.0 ? 1.0 : -1.0) * inv_count;
    }
  }
  out.value *= inv_count;
  return out;
}

LossValueGrad giou_loss_3d(const Box6& pred_box, const Box6& gt_box) {
  for (int a = 0; a < 3; ++a) {
    if (pred_box[3 + a] <= 0.0 || gt_box[3 + a] <= 0.0)
      throw std::invalid_argument("non-positive box size");
  }

  double pmin[3], pmax[3], gmin[3], gmax[3];
  double ilen[3], hlen[3];
  for (int a = 0; a < 3; ++a) {
    pmin[a] = pred_box[a] - 0.5 * pred_box[3 + a];
    pmax[a] = pred_box[a] + 0.5 * pred_box[3 + a];
    gmin[a] = gt_box[a] - 0.5 * gt_box[3 + a];
    gmax[a] = gt_box[a] + 0.5 * gt_box[3 + a];
    ilen[a] = std::max(0.0, std::min(pmax[a], gmax[a]) - std::max(pmin[a], gmin[a]));
    hlen[a] = std::max(pmax[a], gmax[a]) - std::min(pmin[a], gmin[a]);
  }

  const double inter = ilen[0] * ilen[1] * ilen[2];
  const double vol_pred = pred_box[3] * pred_box[4] * pred_box[5];
  const double vol_gt = gt_box[3] * gt_box[4] * gt_box[5];
  const double uni = vol_pred + vol_gt - inter;
  const double hull = hlen[0] * hlen[1] * hlen[2];

  const double giou = inter / uni - (hull - uni) / hull;

  LossValueGrad out;
  out.value = 1.0 - giou;
  out.grad.assign(6, 0.0);

  // Partials per axis through the interval endpoints. Strict comparisons
  // give subgradient 0 at boundary-degenerate ties.
  for (int a = 0; a < 3; ++a) {
    const double other_i = ilen[(a + 1) % 3] * ilen[(a + 2) % 3];
    const double other_h = hlen[(a + 1) % 3] * hlen[(a + 2) % 3];
    const double other_v = vol_pred / pred_box[3 + a];

    const double hi_from_pred = (ilen[a] > 0.0 && pmax[a] < gmax[a]) ? 1.0 : 0.0;
    const double lo_from_pred = (ilen[a] > 0.0 && pmin[a] > gmin[a]) ? 1.0 : 0.0;
    const double hull_hi_from_pred = pmax[a] > gmax[a] ? 1.0 : 0.0;
    const double hull_lo_from_pred = pmin[a] < gmin[a] ? 1.0 : 0.0;

    // d(inter)/d(center), d(inter)/d(size)
    const double di_dc = other_i * (hi_from_pred - lo_from_pred);
    const double di_ds = other_i * 0.5 * (hi_from_pred + lo_from_pred);
    // d(hull)/d(center), d(hull)/d(size)
    const double dh_dc = other_h * (hull_hi_from_pred - hull_lo_from_pred);
    const double dh_ds = other_h * 0.5 * (hull_hi_from_pred + hull_lo_from_pred);
    // d(union) = d(vol_pred) - d(inter)
    const double du_dc = -di_dc;
    const double du_ds = other_v - di_ds;

    const auto d_giou = [&](double di, double du, double dh) {
      const double d_iou = (di * uni - inter * du) / (uni * uni);
      const double d_penalty = (uni * dh - du * hull) / (hull * hull);
      return d_iou - d_penalty;
    };
    out.grad[a] = -d_giou(di_dc, du_dc, dh_dc);
    out.grad[3 + a] = -d_giou(di_ds, du_ds, dh_ds);
  }
  return out;
}

LossValueGrad focal_loss(std::span<const double> probs, std::span<const std::uint8_t> targets,
                         double alpha_bal, double gamma) {
  if (probs.size() != targets.size()) throw std::invalid_argument("shape mismatch");
  if (probs.empty()) throw std::invalid_argument("empty input");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");

  const double inv_count = 1.0 / static_cast<double>(probs.size());
  LossValueGrad out;
  out.grad.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("probs outside (0,1)");
    const bool positive = targets[i] != 0;
    const double p_t = positive ? p : 1.0 - p;
    const double a_t = positive ? alpha_bal : 1.0 - alpha_bal;
    const double focus = std::pow(1.0 - p_t, gamma);
    out.value += -a_t * focus * std::log(p_t);

    // d/dp_t of -(1-p_t)^g log(p_t), then the chain sign for y=0.
    double d_pt = -focus / p_t;
    if (gamma > 0.0) d_pt += gamma * std::pow(1.0 - p_t, gamma - 1.0) * std::log(p_t);
    out.grad[i] = a_t * d_pt * (positive ? 1.0 : -1.0) * inv_count;
  }
  out.value *= inv_count;
  return out;
}

LossValueGrad dice_loss(std::span<const double> probs, std::span<const std::uint8_t> targets,
                        double smooth) {
  if (probs.size() != targets.size()) throw std::invalid_argument("shape mismatch");
  if (probs.empty()) throw std::invalid_argument("empty input");
  if (smooth < 0.0) throw std::invalid_argument("smooth must be nonnegative");

  double overlap = 0.0, p_sum = 0.0, y_sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0))
      throw std::invalid_argument("probs outside [0,1]");
    p_sum += probs[i];
    if (targets[i]) {
      y_sum += 1.0;
      overlap += probs[i];
    }
  }

  const double numer = 2.0 * overlap + smooth;
  const double denom = p_sum + y_sum + smooth;
  if (denom <= 0.0) throw std::invalid_argument("dice denominator is zero");

  LossValueGrad out;
  out.value = 1.0 - numer / denom;
  out.grad.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d_numer = targets[i] ? 2.0 : 0.0;
    out.grad[i] = -(d_numer * denom - numer) / (denom * denom);
  }
  return out;
}

double combine_decoder_loss(const std::array<double, 5>& terms, const LossWeights& weights) {
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) sum += weights.beta[i] * terms[i];
  return sum;
}

double total_loss(std::span<const double> per_layer_dec, double focal, double dice, double kps,
                  const LossWeights& weights) {
  if (per_layer_dec.empty()) throw std::invalid_argument("empty input");
  double rec = 0.0;
  for (double v : per_layer_dec) rec += v;
  rec /= static_cast<double>(per_layer_dec.size());
  return weights.alpha[0] * rec + weights.alpha[1] * focal + weights.alpha[2] * dice +
         weights.alpha[3] * kps;
}

double finite_difference_check(const LossOp& op, std::span<const double> point, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  const LossValueGrad base = op(point);
  std::vector<double> shifted(point.begin(), point.end());

  double worst = 0.0;
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    const double saved = shifted[i];
    shifted[i] = saved + epsilon;
    const double plus = op(shifted).value;
    shifted[i] = saved - epsilon;
    const double minus = op(shifted).value;
    shifted[i] = saved;

    const double fd = (plus - minus) / (2.0 * epsilon);
    const double analytic = base.grad[i];
    const double err = std::abs(fd - analytic) / std::max(1.0, std::abs(analytic));
    worst = std::max(worst, err);
  }
  return worst;
}

bool GradCheckReport::passed() const {
  for (const GradCheckEntry& e : entries)
    if (!(e.max_rel_error < tolerance)) return false;
  return true;
}

namespace {

// Sampling helpers that keep trial points clear of the losses' kinks by at
// least `margin` so the checker precondition holds.

std::vector<double> smooth_l1_point(std::mt19937_64& gen, std::vector<double>& target,
                                    double beta, double margin) {
  std::vector<double> pred(6);
  target.resize(6);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    do {
      pred[i] = uniform_in(gen, -2.0, 2.0);
      target[i] = uniform_in(gen, -2.0, 2.0);
    } while (std::abs(std::abs(pred[i] - target[i]) - beta) < margin);
  }
  return pred;
}

void giou_pair(std::mt19937_64& gen, Box6& pred, Box6& gt, double margin) {
  const auto sample = [&](Box6& box) {
    for (int a = 0; a < 3; ++a) {
      box[a] = uniform_in(gen, -1.0, 1.0);
      box[3 + a] = uniform_in(gen, 0.4, 1.6);
    }
  };
  for (;;) {
    sample(pred);
    sample(gt);
    bool smooth = true;
    for (int a = 0; a < 3 && smooth; ++a) {
      const double p_lo = pred[a] - 0.5 * pred[3 + a], p_hi = pred[a] + 0.5 * pred[3 + a];
      const double g_lo = gt[a] - 0.5 * gt[3 + a], g_hi = gt[a] + 0.5 * gt[3 + a];
      const double overlap = std::min(p_hi, g_hi) - std::max(p_lo, g_lo);
      smooth = std::abs(p_lo - g_lo) > margin && std::abs(p_hi - g_hi) > margin &&
               std::abs(overlap) > margin;
    }
    if (smooth) return;
  }
}

}  // namespace

GradCheckReport run_gradient_suite(int trials, double epsilon, double tolerance,
                                   std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  std::mt19937_64 gen(seed);
  const double margin = std::max(1e-3, 10.0 * epsilon);

  GradCheckReport report;
  report.tolerance = tolerance;

  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> target;
    const std::vector<double> point = smooth_l1_point(gen, target, 1.0, margin);
    const LossOp op = [&target](std::span<const double> x) { return smooth_l1(x, target, 1.0); };
    worst = std::max(worst, finite_difference_check(op, point, epsilon));
  }
  report.entries.push_back({"smooth_l1", worst});

  worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Box6 pred, gt;
    giou_pair(gen, pred, gt, margin);
    const LossOp op = [&gt](std::span<const double> x) {
      Box6 box;
      std::copy_n(x.begin(), 6, box.begin());
      return giou_loss_3d(box, gt);
    };
    worst = std::max(worst, finite_difference_check(op, pred, epsilon));
  }
  report.entries.push_back({"giou_loss_3d", worst});

  worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> probs(8);
    std::vector<std::uint8_t> targets(8);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      probs[i] = uniform_in(gen, 0.1, 0.9);
      targets[i] = gen() & 1;
    }
    const LossOp op = [&targets](std::span<const double> x) {
      return focal_loss(x, targets, 0.25, 2.0);
    };
    worst = std::max(worst, finite_difference_check(op, probs, epsilon));
  }
  report.entries.push_back({"focal_loss", worst});

  worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> probs(8);
    std::vector<std::uint8_t> targets(8);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      probs[i] = uniform_in(gen, 0.05, 0.95);
      targets[i] = gen() & 1;
    }
    const LossOp op = [&targets](std::span<const double> x) {
      return dice_loss(x, targets, 1.0);
    };
    worst = std::max(worst, finite_difference_check(op, probs, epsilon));
  }
  report.entries.push_back({"dice_loss", worst});

  return report;
}

}  // namespace spg
