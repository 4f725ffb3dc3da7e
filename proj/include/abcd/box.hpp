// Axis-aligned box geometry, the IoU family of overlap measures, the CIoU
// regression loss with analytic gradients, anchor-free decoding and
// class-wise greedy NMS.
#ifndef ABCD_BOX_HPP
#define ABCD_BOX_HPP

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "abcd/errors.hpp"

namespace abcd {

inline constexpr double kDefaultNmsThreshold = 0.65;
inline constexpr double kDefaultConfidenceFloor = 0.01;
inline constexpr std::array<int, 3> kDefaultStrides = {8, 16, 32};

// Corner form, pixel units. xmax >= xmin and ymax >= ymin.
template <typename Scalar = double>
struct Box {
  Scalar xmin = 0;
  Scalar ymin = 0;
  Scalar xmax = 0;
  Scalar ymax = 0;

  Scalar width() const { return xmax - xmin; }
  Scalar height() const { return ymax - ymin; }
  Scalar area() const { return width() * height(); }
  Scalar center_x() const { return (xmin + xmax) / 2; }
  Scalar center_y() const { return (ymin + ymax) / 2; }
  bool valid() const { return xmax >= xmin && ymax >= ymin; }

  Box translated(Scalar dx, Scalar dy) const {
    return {xmin + dx, ymin + dy, xmax + dx, ymax + dy};
  }
  Box scaled(Scalar s) const { return {xmin * s, ymin * s, xmax * s, ymax * s}; }

  friend bool operator==(const Box&, const Box&) = default;
};

template <typename Scalar>
struct ScoredBox {
  Box<Scalar> box;
  int class_id = 0;
  Scalar score = 0;
};

template <typename Scalar>
using BoxGradient = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar>
Scalar intersection_area(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const Scalar ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0 || ih <= 0) return Scalar(0);
  return iw * ih;
}

// Zero when the union is empty (two zero-area boxes).
template <typename Scalar>
Scalar iou(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  if (uni <= 0) return Scalar(0);
  return inter / uni;
}

template <typename Scalar>
Scalar giou(const Box<Scalar>& a, const Box<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  if (uni <= 0) return Scalar(0);
  const Scalar enclosing = (std::max(a.xmax, b.xmax) - std::min(a.xmin, b.xmin)) *
                           (std::max(a.ymax, b.ymax) - std::min(a.ymin, b.ymin));
  return inter / uni - (enclosing - uni) / enclosing;
}

// Pieces of 1 - IoU + rho^2 / c^2 + alpha * v.
template <typename Scalar>
struct CiouTerms {
  Scalar iou = 0;
  Scalar rho2 = 0;      // squared centre distance
  Scalar c2 = 0;        // squared diagonal of the enclosing box
  Scalar v = 0;         // aspect-ratio consistency, in [0, 1)
  Scalar alpha = 0;     // trade-off weight, 0 when v == 0
  Scalar loss = 0;
};

namespace detail {

template <typename Scalar>
void require_positive_extent(const Box<Scalar>& b, const char* which) {
  if (!(b.width() > 0) || !(b.height() > 0)) {
    throw DomainError(std::string("ciou: ") + which +
                      " box needs positive width and height");
  }
}

template <typename Scalar>
Scalar aspect_consistency(const Box<Scalar>& pred, const Box<Scalar>& gt) {
  constexpr Scalar k = Scalar(4) / (std::numbers::pi_v<Scalar> *
                                    std::numbers::pi_v<Scalar>);
  const Scalar d =
      std::atan(gt.width() / gt.height()) - std::atan(pred.width() / pred.height());
  return k * d * d;
}

// d max(a, b) / da with the symmetric subgradient at a tie.
template <typename Scalar>
Scalar max_selector(Scalar a, Scalar b) {
  if (a > b) return Scalar(1);
  if (a < b) return Scalar(0);
  return Scalar(0.5);
}

}  // namespace detail

template <typename Scalar>
CiouTerms<Scalar> ciou_terms(const Box<Scalar>& pred, const Box<Scalar>& gt) {
  detail::require_positive_extent(pred, "predicted");
  detail::require_positive_extent(gt, "ground-truth");
  CiouTerms<Scalar> t;
  t.iou = iou(pred, gt);
  const Scalar dx = pred.center_x() - gt.center_x();
  const Scalar dy = pred.center_y() - gt.center_y();
  t.rho2 = dx * dx + dy * dy;
  const Scalar ew = std::max(pred.xmax, gt.xmax) - std::min(pred.xmin, gt.xmin);
  const Scalar eh = std::max(pred.ymax, gt.ymax) - std::min(pred.ymin, gt.ymin);
  t.c2 = ew * ew + eh * eh;
  t.v = detail::aspect_consistency(pred, gt);
  t.alpha = t.v > 0 ? t.v / ((1 - t.iou) + t.v) : Scalar(0);
  t.loss = 1 - t.iou + t.rho2 / t.c2 + t.alpha * t.v;
  return t;
}

template <typename Scalar>
Scalar ciou_loss(const Box<Scalar>& pred, const Box<Scalar>& gt) {
  return ciou_terms(pred, gt).loss;
}

// kConstant holds alpha fixed during differentiation (the usual training
// convention). kFull also differentiates through alpha, i.e. it is the exact
// gradient of ciou_loss.
enum class AlphaMode { kConstant, kFull };

// d loss / d (xmin, ymin, xmax, ymax) of the predicted box. At the kinks of
// the min/max terms the symmetric subgradient is used.
template <typename Scalar>
BoxGradient<Scalar> ciou_grad(const Box<Scalar>& pred, const Box<Scalar>& gt,
                              AlphaMode mode = AlphaMode::kConstant) {
  using Grad = BoxGradient<Scalar>;
  using detail::max_selector;
  const CiouTerms<Scalar> t = ciou_terms(pred, gt);
  const Scalar w = pred.width();
  const Scalar h = pred.height();

  // Intersection.
  const Scalar iw = std::min(pred.xmax, gt.xmax) - std::max(pred.xmin, gt.xmin);
  const Scalar ih = std::min(pred.ymax, gt.ymax) - std::max(pred.ymin, gt.ymin);
  Scalar inter = 0;
  Grad d_inter = Grad::Zero();
  if (iw > 0 && ih > 0) {
    inter = iw * ih;
    d_inter(0) = -ih * max_selector(pred.xmin, gt.xmin);
    d_inter(1) = -iw * max_selector(pred.ymin, gt.ymin);
    d_inter(2) = ih * max_selector(gt.xmax, pred.xmax);
    d_inter(3) = iw * max_selector(gt.ymax, pred.ymax);
  }
  const Grad d_area(-h, -w, h, w);
  const Scalar uni = w * h + gt.area() - inter;
  const Grad d_uni = d_area - d_inter;
  const Grad d_iou = (d_inter * uni - inter * d_uni) / (uni * uni);

  // Centre distance over enclosing diagonal.
  const Scalar dx = pred.center_x() - gt.center_x();
  const Scalar dy = pred.center_y() - gt.center_y();
  const Grad d_rho2(dx, dy, dx, dy);
  const Scalar ew = std::max(pred.xmax, gt.xmax) - std::min(pred.xmin, gt.xmin);
  const Scalar eh = std::max(pred.ymax, gt.ymax) - std::min(pred.ymin, gt.ymin);
  const Grad d_c2(-2 * ew * max_selector(gt.xmin, pred.xmin),
                  -2 * eh * max_selector(gt.ymin, pred.ymin),
                  2 * ew * max_selector(pred.xmax, gt.xmax),
                  2 * eh * max_selector(pred.ymax, gt.ymax));
  const Grad d_dist = (d_rho2 * t.c2 - t.rho2 * d_c2) / (t.c2 * t.c2);

  // Aspect term through theta = atan(w / h).
  constexpr Scalar k = Scalar(4) / (std::numbers::pi_v<Scalar> *
                                    std::numbers::pi_v<Scalar>);
  const Scalar gap = std::atan(gt.width() / gt.height()) - std::atan(w / h);
  const Scalar dv_dtheta = -2 * k * gap;
  const Scalar norm = w * w + h * h;
  const Scalar dv_dw = dv_dtheta * h / norm;
  const Scalar dv_dh = -dv_dtheta * w / norm;
  const Grad d_v(-dv_dw, -dv_dh, dv_dw, dv_dh);

  Grad g = -d_iou + d_dist + t.alpha * d_v;
  if (mode == AlphaMode::kFull && t.v > 0) {
    const Scalar den = (1 - t.iou) + t.v;
    const Grad d_alpha = ((1 - t.iou) * d_v + t.v * d_iou) / (den * den);
    g += t.v * d_alpha;
  }
  return g;
}

template <typename Scalar>
struct RawPrediction {
  int grid_x = 0;
  int grid_y = 0;
  int stride = 8;
  Scalar tx = 0;
  Scalar ty = 0;
  Scalar tw = 0;
  Scalar th = 0;
  std::vector<Scalar> class_scores;
  Scalar objectness = 1;
};

// centre = (grid + t) * stride, size = exp(t) * stride,
// score = objectness * best class score, class = argmax (lowest index on tie).
template <typename Scalar>
ScoredBox<Scalar> decode_anchor_free(const RawPrediction<Scalar>& raw) {
  if (raw.stride <= 0) throw ConfigError("decode: stride must be positive");
  if (raw.class_scores.empty()) throw InputError("decode: no class scores");
  const auto finite = [](Scalar x) { return std::isfinite(x); };
  if (!finite(raw.tx) || !finite(raw.ty) || !finite(raw.tw) ||
      !finite(raw.th) || !finite(raw.objectness) ||
      !std::all_of(raw.class_scores.begin(), raw.class_scores.end(), finite)) {
    throw InputError("decode: raw prediction has non-finite values");
  }
  const Scalar stride = static_cast<Scalar>(raw.stride);
  const Scalar cx = (static_cast<Scalar>(raw.grid_x) + raw.tx) * stride;
  const Scalar cy = (static_cast<Scalar>(raw.grid_y) + raw.ty) * stride;
  const Scalar w = std::exp(raw.tw) * stride;
  const Scalar h = std::exp(raw.th) * stride;
  const auto best =
      std::max_element(raw.class_scores.begin(), raw.class_scores.end());
  ScoredBox<Scalar> out;
  out.box = {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  out.class_id = static_cast<int>(best - raw.class_scores.begin());
  out.score = raw.objectness * *best;
  return out;
}

// Class-wise greedy suppression. T needs members `box`, `class_id` and
// `score`. Candidates are visited by (score desc, xmin asc, ymin asc); one is
// kept iff its IoU with every kept box of its class is below the threshold.
// The result is in visiting order.
template <typename T>
std::vector<T> nms(std::vector<T> dets, double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ConfigError("nms: threshold must lie in [0, 1]");
  }
  std::stable_sort(dets.begin(), dets.end(), [](const T& a, const T& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.xmin != b.box.xmin) return a.box.xmin < b.box.xmin;
    return a.box.ymin < b.box.ymin;
  });
  std::vector<T> kept;
  for (auto& d : dets) {
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const T& k) {
          return k.class_id == d.class_id && iou(k.box, d.box) >= iou_threshold;
        });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

// Drops detections scoring below `score_floor`, then runs nms.
template <typename T>
std::vector<T> postprocess(std::vector<T> dets, double score_floor,
                           double iou_threshold) {
  std::erase_if(dets, [&](const T& d) { return d.score < score_floor; });
  return nms(std::move(dets), iou_threshold);
}

}  // namespace abcd

#endif  // ABCD_BOX_HPP
