#include <charconv>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "abcd/cli.hpp"
#include "abcd/errors.hpp"

namespace abcd::cli {
namespace {

std::string printf_string(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string fixed_or_undefined(const std::optional<double>& v) {
  return v ? printf_string("%.6f", *v) : std::string("undefined");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

EvalReport evaluate(const std::vector<AnnotatedImage>& images,
                    const std::vector<Detection>& dets,
                    const ClassMap& classes, const RunConfig& config) {
  std::vector<GroundTruth> gts;
  for (const auto& img : images) {
    gts.insert(gts.end(), img.annotations.begin(), img.annotations.end());
  }
  EvalReport r;
  r.images = images.size();
  r.ground_truth = gts.size();
  r.detections = dets.size();
  r.iou_threshold = config.iou_threshold;
  r.score_floor = config.score_floor;
  r.range_lo = config.range_lo;
  r.range_hi = config.range_hi;
  r.range_step = config.range_step;
  r.thresholds = sweep_thresholds(config.range_lo, config.range_hi,
                                  config.range_step);

  const auto curve_of = [](const std::vector<PRCurve>& curves, int class_id) {
    for (const auto& c : curves) {
      if (c.class_id == class_id) return c;
    }
    PRCurve empty;
    empty.class_id = class_id;
    return empty;
  };

  const auto at_iou = pr_curves(dets, gts, config.iou_threshold);
  r.map_at_iou = mean_ap(dets, gts, config.iou_threshold);
  r.map_range = map_range(dets, gts, config.range_lo, config.range_hi,
                          config.range_step);
  r.confusion = confusion_matrix(dets, gts, classes.names(),
                                 config.iou_threshold, config.score_floor);

  std::vector<std::vector<PRCurve>> sweep;
  for (const double t : r.thresholds) {
    sweep.push_back(pr_curves(dets, gts, t));
    r.map_by_threshold.push_back(mean_ap(dets, gts, t));
  }

  double p_sum = 0.0;
  double r_sum = 0.0;
  int with_gt = 0;
  for (int c = 0; c < classes.size(); ++c) {
    ClassReport cr;
    cr.name = classes.name(c);
    const PRCurve curve = curve_of(at_iou, c);
    cr.gt = static_cast<std::int64_t>(curve.num_gt);
    cr.ap = curve.ap;
    cr.counts = class_counts(dets, gts, c, config.iou_threshold,
                             config.score_floor);
    cr.pr = precision_recall(cr.counts.tp, cr.counts.fp, cr.counts.fn);
    cr.f1 = f1(cr.pr.precision, cr.pr.recall);
    for (const auto& curves : sweep) {
      cr.ap_by_threshold.push_back(curve_of(curves, c).ap);
    }
    cr.confusion_accuracy = r.confusion.accuracy(c);
    if (cr.gt > 0) {
      p_sum += cr.pr.precision;
      r_sum += cr.pr.recall;
      ++with_gt;
    }
    r.classes.push_back(std::move(cr));
    r.curves.push_back(curve);
  }
  if (with_gt > 0) {
    r.mean_precision = p_sum / with_gt;
    r.mean_recall = r_sum / with_gt;
  }
  r.f1 = f1(r.mean_precision, r.mean_recall);
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "abcd evaluation report\n";
  os << "images: " << r.images << '\n';
  os << "ground_truth: " << r.ground_truth << '\n';
  os << "detections: " << r.detections << '\n';
  os << printf_string("iou_threshold: %.2f\n", r.iou_threshold);
  os << printf_string("score_floor: %.2f\n", r.score_floor);
  os << printf_string("sweep: %.2f:%.2f:%.2f (%zu thresholds)\n", r.range_lo,
                      r.range_hi, r.range_step, r.thresholds.size());
  os << '\n';
  os << printf_string("%-10s %4s %4s %4s %4s %10s %10s %10s %10s %10s\n",
                      "class", "gt", "tp", "fp", "fn", "precision", "recall",
                      "f1", printf_string("ap@%.2f", r.iou_threshold).c_str(),
                      "cm_acc");
  for (const auto& c : r.classes) {
    os << printf_string("%-10s %4lld %4lld %4lld %4lld %10.6f %10.6f %10.6f "
                        "%10s %10.6f\n",
                        c.name.c_str(), static_cast<long long>(c.gt),
                        static_cast<long long>(c.counts.tp),
                        static_cast<long long>(c.counts.fp),
                        static_cast<long long>(c.counts.fn), c.pr.precision,
                        c.pr.recall, c.f1, fixed_or_undefined(c.ap).c_str(),
                        c.confusion_accuracy);
  }
  os << '\n';
  os << printf_string("mAP@%.2f: %.6f\n", r.iou_threshold, r.map_at_iou);
  os << printf_string("mAP@%.2f:%.2f: %.6f\n", r.range_lo, r.range_hi,
                      r.map_range);
  os << printf_string("mean_precision: %.6f\n", r.mean_precision);
  os << printf_string("mean_recall: %.6f\n", r.mean_recall);
  os << printf_string("f1: %.6f\n", r.f1);
  os << '\n';
  os << "ap_by_threshold\n";
  os << printf_string("%-9s", "threshold");
  for (const auto& c : r.classes) os << printf_string(" %10s", c.name.c_str());
  os << printf_string(" %10s\n", "mAP");
  for (std::size_t t = 0; t < r.thresholds.size(); ++t) {
    os << printf_string("%-9.2f", r.thresholds[t]);
    for (const auto& c : r.classes) {
      os << printf_string(" %10s",
                          fixed_or_undefined(c.ap_by_threshold[t]).c_str());
    }
    os << printf_string(" %10.6f\n", r.map_by_threshold[t]);
  }
  os << '\n';
  os << "confusion (rows: ground truth, columns: prediction)\n";
  r.confusion.write_csv(os);
  return os.str();
}

void write_pr_csv(std::ostream& os, const PRCurve& curve) {
  os << "recall,precision\n";
  for (const auto& p : curve.points) {
    os << shortest(p.recall) << ',' << shortest(p.precision) << '\n';
  }
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.paths.size() != 2) {
    err << "usage: abcd eval <annotation_dir> <predictions.jsonl> [options]\n";
    return kExitUsage;
  }
  const ClassMap classes;
  std::vector<std::string> warnings;
  VocOptions opts;
  opts.classes = classes;
  const auto images = load_annotation_dir(config.paths[0], opts, &warnings);
  std::vector<Detection> dets = read_predictions(config.paths[1], classes);

  std::set<std::string> known;
  for (const auto& img : images) known.insert(img.image_id);
  std::set<std::string> unknown;
  for (const auto& d : dets) {
    if (!known.contains(d.image_id)) unknown.insert(d.image_id);
  }
  for (const auto& id : unknown) {
    warnings.push_back("predictions reference unannotated image '" + id +
                       "'; they count as false positives");
  }
  if (config.nms_threshold) {
    dets = nms_per_image(dets, *config.nms_threshold, kDefaultConfidenceFloor);
  }
  if (dets.empty()) {
    warnings.push_back("no detections; every AP is 0");
  }
  for (const auto& w : warnings) err << "warning: " << w << '\n';

  const EvalReport report = evaluate(images, dets, classes, config);
  const std::string text = format_report(report);

  std::filesystem::create_directories(config.out_dir);
  write_file(config.out_dir / "report.txt", text);
  for (const auto& curve : report.curves) {
    const std::string& name = classes.name(curve.class_id);
    std::ostringstream csv;
    write_pr_csv(csv, curve);
    write_file(config.out_dir / ("pr_" + name + ".csv"), csv.str());
    if (config.svg) {
      write_file(config.out_dir / ("pr_" + name + ".svg"),
                 render_pr_svg(curve, name));
    }
  }
  std::ostringstream cm;
  report.confusion.write_csv(cm);
  write_file(config.out_dir / "confusion.csv", cm.str());
  out << text;
  return kExitOk;
}

}  // namespace abcd::cli
