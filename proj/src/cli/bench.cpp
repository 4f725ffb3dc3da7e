#include <cstdio>
#include <fstream>

#include "abcd/cli.hpp"
#include "abcd/errors.hpp"

namespace abcd::cli {
namespace {

constexpr int kBenchImages = 16;
constexpr int kBenchChannels = 32;
constexpr int kBenchWidth = 640;
constexpr int kBenchHeight = 480;

FeatureMap<double> random_map(Index c, Index side, Rng& rng) {
  FeatureMap<double> m(c, side, side);
  for (Index i = 0; i < m.size(); ++i) m.data().data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

Box<double> random_box(Rng& rng) {
  const double w = rng.uniform(8.0, 80.0);
  const double h = rng.uniform(8.0, 80.0);
  const double x = rng.uniform(0.0, kBenchWidth - w);
  const double y = rng.uniform(0.0, kBenchHeight - h);
  return {x, y, x + w, y + h};
}

// Keeps the optimiser from discarding benchmarked results.
volatile double g_sink = 0.0;

}  // namespace

BenchPayload make_bench_payload(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<BoxPair> pairs = random_box_pairs(256, seed);

  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
  for (int i = 0; i < kBenchImages; ++i) {
    const std::string id = "img" + std::to_string(i);
    for (int g = 0; g < 20; ++g) {
      const int cls = static_cast<int>(rng.below(3));
      const Box<double> b = random_box(rng);
      gts.push_back({id, cls, b});
      // A jittered hit and some clutter per object.
      const double dx = rng.uniform(-4.0, 4.0);
      const double dy = rng.uniform(-4.0, 4.0);
      dets.push_back({id, cls, rng.uniform(0.3, 1.0), b.translated(dx, dy)});
      for (int k = 0; k < 2; ++k) {
        dets.push_back({id, static_cast<int>(rng.below(3)),
                        rng.uniform(0.0, 0.6), random_box(rng)});
      }
    }
  }

  FeatureMap<double> feature = random_map(kBenchChannels, 40, rng);
  CbamParams<double> cbam = CbamParams<double>::random(kBenchChannels, rng);
  std::vector<FeatureMap<double>> pyramid;
  for (const Index side : {20, 40, 80}) {
    pyramid.push_back(random_map(kBenchChannels, side, rng));
  }
  AsffParams<double> asff = AsffParams<double>::random(kBenchChannels, rng);

  ImageRGB image(kBenchWidth, kBenchHeight);
  for (auto& p : image.pixels) p = static_cast<std::uint8_t>(rng.below(256));

  return {std::move(pairs), std::move(dets),    std::move(gts),
          std::move(feature), std::move(cbam), std::move(pyramid),
          std::move(asff),   std::move(image)};
}

int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream&) {
  if (config.repetitions < 3) throw ConfigError("--reps must be >= 3");
  const BenchPayload p = make_bench_payload(config.seed);
  const PyramidFeatures<double> pyr(p.pyramid[0], p.pyramid[1], p.pyramid[2]);
  const int reps = config.repetitions;
  const double nms_thr = config.nms_threshold.value_or(kDefaultNmsThreshold);

  std::vector<BenchResult> results;
  results.push_back(fps_benchmark("iou", [&] {
    double s = 0.0;
    for (const auto& bp : p.pairs) s += iou(bp.pred, bp.gt);
    g_sink = s;
  }, reps));
  results.push_back(fps_benchmark("ciou_loss", [&] {
    double s = 0.0;
    for (const auto& bp : p.pairs) s += ciou_loss(bp.pred, bp.gt);
    g_sink = s;
  }, reps));
  results.push_back(fps_benchmark("ciou_grad", [&] {
    double s = 0.0;
    for (const auto& bp : p.pairs) s += ciou_grad(bp.pred, bp.gt).sum();
    g_sink = s;
  }, reps));
  results.push_back(fps_benchmark("nms", [&] {
    g_sink = static_cast<double>(
        nms_per_image(p.detections, nms_thr, config.score_floor).size());
  }, reps));
  results.push_back(fps_benchmark("cbam_apply", [&] {
    g_sink = cbam_apply(p.feature, p.cbam).data()(0, 0);
  }, reps));
  results.push_back(fps_benchmark("asff_fuse", [&] {
    g_sink = asff_fuse(pyr, p.asff, 3).data()(0, 0);
  }, reps));
  results.push_back(fps_benchmark("mean_ap", [&] {
    g_sink = mean_ap(p.detections, p.ground_truth, config.iou_threshold);
  }, reps));
  results.push_back(fps_benchmark("map_range", [&] {
    g_sink = map_range(p.detections, p.ground_truth, config.range_lo,
                       config.range_hi, config.range_step);
  }, reps));
  results.push_back(fps_benchmark("augment_hue_640x480", [&] {
    g_sink = augment(p.image, {}, HueShift{12.0}).image.pixels[0];
  }, reps));

  std::filesystem::create_directories(config.out_dir);
  const auto csv_path = config.out_dir / "bench.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "op,median_s,p10_s,p90_s,ops_per_s\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %12s %12s %12s %14s\n", "op",
                "median_s", "p10_s", "p90_s", "ops_per_s");
  out << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%s,%.9e,%.9e,%.9e,%.6e\n", r.op.c_str(),
                  r.median_s, r.p10_s, r.p90_s, r.ops_per_s);
    csv << line;
    std::snprintf(line, sizeof(line), "%-22s %12.3e %12.3e %12.3e %14.1f\n",
                  r.op.c_str(), r.median_s, r.p10_s, r.p90_s, r.ops_per_s);
    out << line;
  }
  out << "wrote " << csv_path.string() << '\n';
  return kExitOk;
}

}  // namespace abcd::cli
