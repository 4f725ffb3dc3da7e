#include <charconv>
#include <ostream>

#include <CLI11.hpp>

#include "abcd/cli.hpp"
#include "abcd/errors.hpp"

namespace abcd::cli {
namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0, 1]");
  }
}

double parse_double(std::string_view text, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() ||
      res.ptr != text.data() + text.size()) {
    throw ConfigError(std::string("bad number for ") + what + ": '" +
                      std::string(text) + "'");
  }
  return v;
}

struct CommonOptions {
  std::string range;
  double nms = kDefaultNmsThreshold;
};

void add_common(CLI::App& sub, RunConfig& config, CommonOptions& common) {
  sub.add_option("--iou", config.iou_threshold, "IoU match threshold");
  sub.add_option("--range", common.range, "IoU sweep LO:HI:STEP");
  sub.add_option("--nms", common.nms, "NMS IoU threshold");
  sub.add_option("--score-floor", config.score_floor,
                 "minimum detection score for counts and confusion matrix");
  sub.add_option("--seed", config.seed, "random seed")->envname("ABCD_SEED");
  sub.add_option("--out", config.out_dir, "output directory");
  sub.add_option("paths", config.paths, "input paths");
}

}  // namespace

void RunConfig::validate() const {
  check_unit(iou_threshold, "--iou");
  check_unit(range_lo, "range lo");
  check_unit(range_hi, "range hi");
  if (!(range_step > 0.0)) throw ConfigError("range step must be > 0");
  if (!(range_lo <= range_hi)) throw ConfigError("range needs lo <= hi");
  if (nms_threshold) check_unit(*nms_threshold, "--nms");
  check_unit(score_floor, "--score-floor");
}

void parse_range(const std::string& text, RunConfig& config) {
  const auto first = text.find(':');
  const auto second =
      first == std::string::npos ? first : text.find(':', first + 1);
  if (second == std::string::npos) {
    throw ConfigError("--range expects LO:HI:STEP, got '" + text + "'");
  }
  const std::string_view s(text);
  config.range_lo = parse_double(s.substr(0, first), "range lo");
  config.range_hi =
      parse_double(s.substr(first + 1, second - first - 1), "range hi");
  config.range_step = parse_double(s.substr(second + 1), "range step");
}

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Detection metrics, box losses, attention/fusion modules and "
               "dataset tooling",
               "abcd"};
  app.require_subcommand(1);
  RunConfig config;
  CommonOptions common;

  auto* eval = app.add_subcommand("eval", "evaluate predictions against VOC annotations");
  add_common(*eval, config, common);
  eval->add_flag("--svg", config.svg, "also write pr_<class>.svg");

  auto* split = app.add_subcommand("split", "seeded train/val/test split");
  add_common(*split, config, common);
  split->add_option("--ratios", config.ratios, "train:val:test weights");

  auto* augment = app.add_subcommand("augment", "write augmented images and annotations");
  add_common(*augment, config, common);
  augment->add_option("--ops", config.ops, "ops to draw from")->delimiter(',');
  augment->add_option("--copies", config.copies, "augmented copies per image");
  augment->add_option("--ids", config.ids_file, "restrict to ids listed in a file");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the CIoU gradient");
  add_common(*gradcheck, config, common);
  gradcheck->add_option("--pairs", config.pairs, "random box pairs");
  gradcheck->add_flag("--corrupt-gradient", config.corrupt_gradient,
                      "perturb the analytic gradient (negative control)");

  auto* demo = app.add_subcommand("demo", "run attention and fusion on a synthetic pyramid");
  add_common(*demo, config, common);
  demo->add_option("--mode", config.demo_mode, "random | zero | equal")
      ->check(CLI::IsMember({"random", "zero", "equal"}));
  demo->add_option("--channels", config.channels, "pyramid channel count");

  auto* bench = app.add_subcommand("bench", "time evaluation and module operations");
  add_common(*bench, config, common);
  bench->add_option("--reps", config.repetitions, "timed repetitions per op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const CLI::App* chosen = app.get_subcommands().front();
    config.command = chosen->get_name();
    if (!common.range.empty()) parse_range(common.range, config);
    if (chosen->get_option("--nms")->count() > 0) {
      config.nms_threshold = common.nms;
    }
    config.validate();
    if (config.command == "eval") return cmd_eval(config, out, err);
    if (config.command == "split") return cmd_split(config, out, err);
    if (config.command == "augment") return cmd_augment(config, out, err);
    if (config.command == "gradcheck") return cmd_gradcheck(config, out, err);
    if (config.command == "demo") return cmd_demo(config, out, err);
    if (config.command == "bench") return cmd_bench(config, out, err);
  } catch (const Error& e) {
    err << "abcd " << config.command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "abcd " << config.command << ": " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace abcd::cli
