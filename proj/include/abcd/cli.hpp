// Command layer behind the `abcd` executable. Each command is a function of
// a RunConfig returning the process exit code, so tests can drive commands
// in-process.
#ifndef ABCD_CLI_HPP
#define ABCD_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abcd/asff.hpp"
#include "abcd/cbam.hpp"
#include "abcd/dataio.hpp"
#include "abcd/eval.hpp"
#include "abcd/gradcheck.hpp"

namespace abcd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // assertion or tolerance failure
inline constexpr int kExitUsage = 2;    // bad arguments, IO or input errors

struct RunConfig {
  std::string command;
  std::vector<std::string> paths;
  double iou_threshold = kDefaultIouThreshold;
  double range_lo = kDefaultRangeLo;
  double range_hi = kDefaultRangeHi;
  double range_step = kDefaultRangeStep;
  // NMS runs in `eval` only when a threshold was given explicitly.
  std::optional<double> nms_threshold;
  double score_floor = kDefaultScoreFloor;
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path out_dir = ".";

  // eval
  bool svg = false;
  // split
  std::string ratios = "7:2:1";
  // augment
  std::vector<std::string> ops = {"hflip", "vflip", "rot90", "hue", "exposure"};
  int copies = 1;
  std::string ids_file;
  // gradcheck
  std::size_t pairs = 1000;
  bool corrupt_gradient = false;
  // demo
  std::string demo_mode = "random";
  int channels = 32;
  // bench
  int repetitions = 5;

  // Thresholds in [0, 1], step > 0. Throws ConfigError.
  void validate() const;
};

// Parses "LO:HI:STEP" into the config. Throws ConfigError.
void parse_range(const std::string& text, RunConfig& config);

// Parses argv, dispatches, maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_split(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_augment(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const RunConfig& config, std::ostream& out,
                  std::ostream& err);
int cmd_demo(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Evaluation report

struct ClassReport {
  std::string name;
  std::int64_t gt = 0;
  ClassCounts counts;
  PrecisionRecall pr;
  double f1 = 0.0;
  std::optional<double> ap;                          // at iou_threshold
  std::vector<std::optional<double>> ap_by_threshold;  // over the sweep
  double confusion_accuracy = 0.0;
};

struct EvalReport {
  std::size_t images = 0;
  std::size_t ground_truth = 0;
  std::size_t detections = 0;
  double iou_threshold = kDefaultIouThreshold;
  double score_floor = kDefaultScoreFloor;
  double range_lo = kDefaultRangeLo;
  double range_hi = kDefaultRangeHi;
  double range_step = kDefaultRangeStep;
  std::vector<double> thresholds;
  std::vector<ClassReport> classes;
  double map_at_iou = 0.0;
  double map_range = 0.0;
  std::vector<double> map_by_threshold;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double f1 = 0.0;
  ConfusionMatrix confusion{{"?"}};
  std::vector<PRCurve> curves;  // at iou_threshold, one per class map entry
};

EvalReport evaluate(const std::vector<AnnotatedImage>& images,
                    const std::vector<Detection>& dets,
                    const ClassMap& classes, const RunConfig& config);

std::string format_report(const EvalReport& report);

void write_pr_csv(std::ostream& os, const PRCurve& curve);

// Minimal polyline rendering of a PR curve.
std::string render_pr_svg(const PRCurve& curve, const std::string& title);

// ---------------------------------------------------------------------------
// Bench payloads (exposed so determinism can be tested)

struct BenchPayload {
  std::vector<BoxPair> pairs;
  std::vector<Detection> detections;
  std::vector<GroundTruth> ground_truth;
  FeatureMap<double> feature;
  CbamParams<double> cbam;
  std::vector<FeatureMap<double>> pyramid;
  AsffParams<double> asff;
  ImageRGB image;
};

BenchPayload make_bench_payload(std::uint64_t seed);

}  // namespace abcd::cli

#endif  // ABCD_CLI_HPP
