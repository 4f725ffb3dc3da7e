// Detection evaluation: greedy matching, precision / recall / F1, all-point
// interpolated AP, mAP and its IoU-threshold sweep, a class-by-class
// confusion matrix with a background bucket, and a throughput harness.
#ifndef ABCD_EVAL_HPP
#define ABCD_EVAL_HPP

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "abcd/box.hpp"

namespace abcd {

struct Detection {
  std::string image_id;
  int class_id = 0;
  double score = 0.0;
  Box<double> box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruth {
  std::string image_id;
  int class_id = 0;
  Box<double> box;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

inline constexpr double kDefaultIouThreshold = 0.5;
inline constexpr double kDefaultRangeLo = 0.50;
inline constexpr double kDefaultRangeHi = 0.90;
inline constexpr double kDefaultRangeStep = 0.05;
inline constexpr double kDefaultScoreFloor = 0.25;

// Flags are indexed like the inputs.
struct MatchResult {
  std::vector<bool> det_is_tp;
  std::vector<bool> gt_matched;
  // Index of the matched ground truth per detection, -1 when unmatched.
  std::vector<std::ptrdiff_t> det_match;
};

// Per image and class, detections in descending score order (input order on
// ties) each claim the still-unmatched ground truth of the same class with the
// highest IoU >= threshold, lowest ground-truth index on ties.
MatchResult match_detections(std::span<const Detection> dets,
                             std::span<const GroundTruth> gts,
                             double iou_threshold);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Each ratio is 0 when its denominator is 0.
PrecisionRecall precision_recall(std::int64_t tp, std::int64_t fp,
                                 std::int64_t fn);

// 2PR / (P + R), 0 when P + R == 0.
double f1(double precision, double recall);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  int class_id = 0;
  std::size_t num_gt = 0;
  // One sample per ranked detection of the class.
  std::vector<PrPoint> points;
  // Empty when the class has no ground truth.
  std::optional<double> ap;

  bool defined() const { return ap.has_value(); }
};

// Area under the monotone (running-max from the right) precision envelope,
// integrated exactly over the recall steps.
PRCurve average_precision(std::span<const Detection> dets,
                          std::span<const GroundTruth> gts, int class_id,
                          double iou_threshold);

// One curve per class id seen in either input, ascending by class id.
std::vector<PRCurve> pr_curves(std::span<const Detection> dets,
                               std::span<const GroundTruth> gts,
                               double iou_threshold);

// Mean AP over classes with at least one ground truth. Throws
// EvaluationError when no class qualifies.
double mean_ap(std::span<const Detection> dets,
               std::span<const GroundTruth> gts, double iou_threshold);

// {lo, lo + step, ..., hi} inclusive; each value rounded to 12 decimals so
// accumulated steps land on the intended decimal.
std::vector<double> sweep_thresholds(double lo, double hi, double step);

double map_range(std::span<const Detection> dets,
                 std::span<const GroundTruth> gts,
                 double lo = kDefaultRangeLo, double hi = kDefaultRangeHi,
                 double step = kDefaultRangeStep);

struct ClassCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

// TP / FP / FN of one class using detections scoring at least `score_floor`.
ClassCounts class_counts(std::span<const Detection> dets,
                         std::span<const GroundTruth> gts, int class_id,
                         double iou_threshold, double score_floor);

// Rows are ground truth, columns predictions; index num_classes() is the
// background bucket (missed ground truth in the last column, spurious
// detections in the last row).
class ConfusionMatrix {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ConfusionMatrix(std::vector<std::string> class_names);

  int num_classes() const { return static_cast<int>(names_.size()); }
  int background() const { return num_classes(); }
  const std::vector<std::string>& class_names() const { return names_; }

  std::int64_t operator()(int gt_row, int pred_col) const {
    return counts_(gt_row, pred_col);
  }
  void add(int gt_row, int pred_col) { ++counts_(gt_row, pred_col); }
  const Counts& counts() const { return counts_; }

  std::int64_t gt_count(int class_id) const;
  // Diagonal share of the class's ground-truth row, 0 for an empty row.
  double accuracy(int class_id) const;

  // Labelled CSV: header `gt\pred,<names...>,background`, one row per class
  // and a final background row.
  void write_csv(std::ostream& os) const;

 private:
  std::vector<std::string> names_;
  Counts counts_;
};

// Class-agnostic greedy matching per image: detections scoring at least
// `score_floor`, in descending score order, claim the unmatched ground truth
// with highest IoU >= threshold regardless of class.
ConfusionMatrix confusion_matrix(std::span<const Detection> dets,
                                 std::span<const GroundTruth> gts,
                                 std::vector<std::string> class_names,
                                 double iou_threshold = kDefaultIouThreshold,
                                 double score_floor = kDefaultScoreFloor);

struct BenchResult {
  std::string op;
  double median_s = 0.0;
  double p10_s = 0.0;
  double p90_s = 0.0;
  double ops_per_s = 0.0;
  std::size_t batch = 1;  // invocations timed per sample
};

// Times `op` `repetitions` times (>= 3) and reports per-invocation wall-clock
// order statistics. Very fast ops are batched so a single sample spans at
// least `min_sample_s`.
BenchResult fps_benchmark(const std::string& name,
                          const std::function<void()>& op, int repetitions,
                          double min_sample_s = 50e-6);

// Class-wise NMS applied to each image separately.
std::vector<Detection> nms_per_image(std::span<const Detection> dets,
                                     double iou_threshold,
                                     double score_floor = 0.0);

}  // namespace abcd

#endif  // ABCD_EVAL_HPP
