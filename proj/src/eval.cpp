#include "abcd/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>

#include "abcd/errors.hpp"

namespace abcd {
namespace {

void check_threshold(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0, 1], got " +
                      std::to_string(t));
  }
}

// Indices sorted by descending score; equal scores keep input order.
template <typename Pred>
std::vector<std::size_t> ranked(std::span<const Detection> dets, Pred keep) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (keep(dets[i])) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  return order;
}

// Greedy claim of the best unmatched candidate. Returns the claimed index
// into `candidates` or -1.
std::ptrdiff_t claim(const Box<double>& box,
                     std::span<const GroundTruth> gts,
                     const std::vector<std::size_t>& candidates,
                     std::vector<bool>& matched, double iou_threshold) {
  std::ptrdiff_t best = -1;
  double best_iou = -1.0;
  for (const std::size_t g : candidates) {
    if (matched[g]) continue;
    const double o = iou(box, gts[g].box);
    if (o >= iou_threshold && o > best_iou) {
      best = static_cast<std::ptrdiff_t>(g);
      best_iou = o;
    }
  }
  if (best >= 0) matched[static_cast<std::size_t>(best)] = true;
  return best;
}

double interpolate_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PRCurve curve_for_class(std::span<const Detection> dets,
                        std::span<const GroundTruth> gts,
                        const MatchResult& match, int class_id) {
  PRCurve curve;
  curve.class_id = class_id;
  curve.num_gt = static_cast<std::size_t>(
      std::count_if(gts.begin(), gts.end(), [&](const GroundTruth& g) {
        return g.class_id == class_id;
      }));
  const auto order = ranked(
      dets, [&](const Detection& d) { return d.class_id == class_id; });
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  curve.points.reserve(order.size());
  for (const std::size_t i : order) {
    if (match.det_is_tp[i]) {
      ++tp;
    } else {
      ++fp;
    }
    const double recall =
        curve.num_gt == 0
            ? 0.0
            : static_cast<double>(tp) / static_cast<double>(curve.num_gt);
    curve.points.push_back(
        {recall, static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  if (curve.num_gt == 0) return curve;

  std::vector<double> envelope(curve.points.size());
  double running = 0.0;
  for (std::size_t i = curve.points.size(); i-- > 0;) {
    running = std::max(running, curve.points[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    ap += (curve.points[i].recall - prev_recall) * envelope[i];
    prev_recall = curve.points[i].recall;
  }
  curve.ap = ap;
  return curve;
}

}  // namespace

MatchResult match_detections(std::span<const Detection> dets,
                             std::span<const GroundTruth> gts,
                             double iou_threshold) {
  check_threshold(iou_threshold, "match iou threshold");
  using Key = std::pair<std::string, int>;
  std::map<Key, std::vector<std::size_t>> gt_groups;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    gt_groups[{gts[g].image_id, gts[g].class_id}].push_back(g);
  }
  MatchResult result;
  result.det_is_tp.assign(dets.size(), false);
  result.det_match.assign(dets.size(), -1);
  result.gt_matched.assign(gts.size(), false);
  static const std::vector<std::size_t> kNone;
  for (const std::size_t i : ranked(dets, [](const Detection&) { return true; })) {
    const auto it = gt_groups.find({dets[i].image_id, dets[i].class_id});
    const auto& candidates = it == gt_groups.end() ? kNone : it->second;
    const std::ptrdiff_t g = claim(dets[i].box, gts, candidates,
                                   result.gt_matched, iou_threshold);
    result.det_match[i] = g;
    result.det_is_tp[i] = g >= 0;
  }
  return result;
}

PrecisionRecall precision_recall(std::int64_t tp, std::int64_t fp,
                                 std::int64_t fn) {
  if (tp < 0 || fp < 0 || fn < 0) {
    throw ConfigError("precision_recall: counts must be nonnegative");
  }
  PrecisionRecall pr;
  if (tp + fp > 0) {
    pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn > 0) {
    pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  return pr;
}

double f1(double precision, double recall) {
  const double sum = precision + recall;
  if (sum == 0.0) return 0.0;
  return 2.0 * precision * recall / sum;
}

PRCurve average_precision(std::span<const Detection> dets,
                          std::span<const GroundTruth> gts, int class_id,
                          double iou_threshold) {
  const MatchResult match = match_detections(dets, gts, iou_threshold);
  return curve_for_class(dets, gts, match, class_id);
}

std::vector<PRCurve> pr_curves(std::span<const Detection> dets,
                               std::span<const GroundTruth> gts,
                               double iou_threshold) {
  const MatchResult match = match_detections(dets, gts, iou_threshold);
  std::vector<int> classes;
  for (const auto& g : gts) classes.push_back(g.class_id);
  for (const auto& d : dets) classes.push_back(d.class_id);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<PRCurve> curves;
  curves.reserve(classes.size());
  for (const int c : classes) {
    curves.push_back(curve_for_class(dets, gts, match, c));
  }
  return curves;
}

double mean_ap(std::span<const Detection> dets,
               std::span<const GroundTruth> gts, double iou_threshold) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& curve : pr_curves(dets, gts, iou_threshold)) {
    if (!curve.defined()) continue;
    sum += *curve.ap;
    ++n;
  }
  if (n == 0) throw EvaluationError("mean_ap: no class has ground truth");
  return sum / static_cast<double>(n);
}

std::vector<double> sweep_thresholds(double lo, double hi, double step) {
  if (!(step > 0.0)) throw ConfigError("threshold sweep step must be > 0");
  if (!(lo <= hi)) throw ConfigError("threshold sweep needs lo <= hi");
  check_threshold(lo, "sweep lo");
  check_threshold(hi, "sweep hi");
  const auto count =
      static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = lo + static_cast<double>(i) * step;
    out.push_back(std::round(t * 1e12) / 1e12);
  }
  return out;
}

double map_range(std::span<const Detection> dets,
                 std::span<const GroundTruth> gts, double lo, double hi,
                 double step) {
  const auto thresholds = sweep_thresholds(lo, hi, step);
  double sum = 0.0;
  for (const double t : thresholds) sum += mean_ap(dets, gts, t);
  return sum / static_cast<double>(thresholds.size());
}

ClassCounts class_counts(std::span<const Detection> dets,
                         std::span<const GroundTruth> gts, int class_id,
                         double iou_threshold, double score_floor) {
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    if (d.score >= score_floor) kept.push_back(d);
  }
  const MatchResult match = match_detections(kept, gts, iou_threshold);
  ClassCounts counts;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i].class_id != class_id) continue;
    if (match.det_is_tp[i]) {
      ++counts.tp;
    } else {
      ++counts.fp;
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gts[g].class_id == class_id && !match.gt_matched[g]) ++counts.fn;
  }
  return counts;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)) {
  if (names_.empty()) throw ConfigError("confusion matrix needs a class");
  const auto k = static_cast<Eigen::Index>(names_.size()) + 1;
  counts_ = Counts::Zero(k, k);
}

std::int64_t ConfusionMatrix::gt_count(int class_id) const {
  return counts_.row(class_id).sum();
}

double ConfusionMatrix::accuracy(int class_id) const {
  const std::int64_t total = gt_count(class_id);
  if (total == 0) return 0.0;
  return static_cast<double>(counts_(class_id, class_id)) /
         static_cast<double>(total);
}

void ConfusionMatrix::write_csv(std::ostream& os) const {
  os << "gt\\pred";
  for (const auto& n : names_) os << ',' << n;
  os << ",background\n";
  for (int r = 0; r <= num_classes(); ++r) {
    os << (r == background() ? std::string("background") : names_[r]);
    for (int c = 0; c <= num_classes(); ++c) os << ',' << counts_(r, c);
    os << '\n';
  }
}

ConfusionMatrix confusion_matrix(std::span<const Detection> dets,
                                 std::span<const GroundTruth> gts,
                                 std::vector<std::string> class_names,
                                 double iou_threshold, double score_floor) {
  check_threshold(iou_threshold, "confusion iou threshold");
  check_threshold(score_floor, "confusion score floor");
  ConfusionMatrix cm(std::move(class_names));
  const auto in_range = [&](int c) { return c >= 0 && c < cm.num_classes(); };

  std::map<std::string, std::vector<std::size_t>> gt_by_image;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!in_range(gts[g].class_id)) {
      throw ConfigError("confusion matrix: ground-truth class id " +
                        std::to_string(gts[g].class_id) + " out of range");
    }
    gt_by_image[gts[g].image_id].push_back(g);
  }
  std::vector<bool> matched(gts.size(), false);
  static const std::vector<std::size_t> kNone;
  const auto order = ranked(
      dets, [&](const Detection& d) { return d.score >= score_floor; });
  for (const std::size_t i : order) {
    if (!in_range(dets[i].class_id)) {
      throw ConfigError("confusion matrix: detection class id " +
                        std::to_string(dets[i].class_id) + " out of range");
    }
    const auto it = gt_by_image.find(dets[i].image_id);
    const auto& candidates = it == gt_by_image.end() ? kNone : it->second;
    const std::ptrdiff_t g =
        claim(dets[i].box, gts, candidates, matched, iou_threshold);
    if (g >= 0) {
      cm.add(gts[static_cast<std::size_t>(g)].class_id, dets[i].class_id);
    } else {
      cm.add(cm.background(), dets[i].class_id);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!matched[g]) cm.add(gts[g].class_id, cm.background());
  }
  return cm;
}

BenchResult fps_benchmark(const std::string& name,
                          const std::function<void()>& op, int repetitions,
                          double min_sample_s) {
  if (repetitions < 3) throw ConfigError("fps_benchmark needs >= 3 repetitions");
  using Clock = std::chrono::steady_clock;
  const auto time_batch = [&](std::size_t batch) {
    const auto start = Clock::now();
    for (std::size_t i = 0; i < batch; ++i) op();
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  std::size_t batch = 1;
  while (batch < (std::size_t{1} << 20) && time_batch(batch) < min_sample_s) {
    batch *= 2;
  }
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    samples.push_back(time_batch(batch) / static_cast<double>(batch));
  }
  std::sort(samples.begin(), samples.end());
  BenchResult out;
  out.op = name;
  out.batch = batch;
  out.median_s = interpolate_sorted(samples, 0.5);
  out.p10_s = interpolate_sorted(samples, 0.1);
  out.p90_s = interpolate_sorted(samples, 0.9);
  out.ops_per_s = 1.0 / std::max(out.median_s, 1e-12);
  return out;
}

std::vector<Detection> nms_per_image(std::span<const Detection> dets,
                                     double iou_threshold,
                                     double score_floor) {
  std::map<std::string, std::vector<Detection>> by_image;
  for (const auto& d : dets) by_image[d.image_id].push_back(d);
  std::vector<Detection> out;
  for (auto& [id, group] : by_image) {
    auto kept = postprocess(std::move(group), score_floor, iou_threshold);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

}  // namespace abcd
