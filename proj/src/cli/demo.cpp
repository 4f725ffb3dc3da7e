#include <algorithm>
#include <cmath>
#include <sstream>

#include "abcd/asff.hpp"
#include "abcd/cbam.hpp"
#include "abcd/cli.hpp"
#include "abcd/errors.hpp"
#include "abcd/params_io.hpp"

namespace abcd::cli {
namespace {

constexpr Index kLevelSides[kPyramidLevels] = {8, 16, 32};

FeatureMap<double> random_map(Index c, Index side, Rng& rng) {
  FeatureMap<double> m(c, side, side);
  for (Index i = 0; i < m.size(); ++i) m.data().data()[i] = rng.uniform(-2.0, 2.0);
  return m;
}

class Checker {
 public:
  explicit Checker(std::ostream& err) : err_(err) {}

  void require(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) {
      ++failures_;
      err_ << "invariant violated: " << what << '\n';
    }
  }

  int checks() const { return checks_; }
  int failures() const { return failures_; }

 private:
  std::ostream& err_;
  int checks_ = 0;
  int failures_ = 0;
};

}  // namespace

int cmd_demo(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.channels < 1) throw ConfigError("--channels must be >= 1");
  const Index c = config.channels;
  const std::string& mode = config.demo_mode;
  Rng rng(config.seed);

  std::vector<FeatureMap<double>> levels;
  for (const Index side : kLevelSides) levels.push_back(random_map(c, side, rng));

  std::vector<CbamParams<double>> cbam;
  for (int l = 0; l < kPyramidLevels; ++l) {
    cbam.push_back(mode == "zero" ? CbamParams<double>::zeros(c)
                                  : CbamParams<double>::random(c, rng));
  }
  AsffParams<double> asff = AsffParams<double>::zeros(c);
  if (mode == "random") {
    asff = AsffParams<double>::random(c, rng);
  } else if (mode == "equal") {
    // Zero weights and one shared bias per target: equal logits everywhere.
    for (int t = 1; t <= kPyramidLevels; ++t) {
      const double bias = rng.uniform(-1.0, 1.0);
      for (int s = 1; s <= kPyramidLevels; ++s) asff.generator(t, s).bias()(0) = bias;
    }
  }

  Checker check(err);
  TensorArchive ar;
  std::vector<FeatureMap<double>> refined;
  for (int l = 0; l < kPyramidLevels; ++l) {
    const std::string tag = "level" + std::to_string(l + 1);
    const auto trace = cbam_trace(levels[l], cbam[l]);
    const auto& in = levels[l];
    const auto& o = trace.output;
    check.require(o.same_shape(in), tag + ": cbam preserves shape");
    check.require(o.all_finite(), tag + ": cbam output finite");
    check.require(
        (o.data().array().abs() <= in.data().array().abs()).all(),
        tag + ": |cbam(F)| <= |F|");
    if (mode == "zero") {
      check.require(((o.data() - 0.25 * in.data()).array().abs() <= 1e-9).all(),
                    tag + ": zero params give 0.25 * F");
    }
    put_feature_map(ar, tag + ".input", in);
    put_vector(ar, tag + ".cbam.channel_weights", trace.channel_weights);
    put_feature_map(ar, tag + ".cbam.spatial_weights", trace.spatial_weights);
    put_feature_map(ar, tag + ".cbam.output", o);
    put_cbam(ar, tag + ".cbam.params", cbam[l]);
    refined.push_back(o);
  }

  const PyramidFeatures<double> pyr(refined[0], refined[1], refined[2]);
  put_asff(ar, "asff.params", asff);
  for (int t = 1; t <= kPyramidLevels; ++t) {
    const std::string tag = "asff" + std::to_string(t);
    const auto trace = asff_trace(pyr, asff, t);
    const RowMajorMatrix<double> total = trace.weights[0].data() +
                                         trace.weights[1].data() +
                                         trace.weights[2].data();
    check.require(((total.array() - 1.0).abs() <= 1e-6).all(),
                  tag + ": weights sum to 1");
    if (mode != "random") {
      for (const auto& w : trace.weights) {
        check.require(((w.data().array() - 1.0 / 3.0).abs() <= 1e-12).all(),
                      tag + ": equal logits give weights 1/3");
      }
    }
    const auto& r = trace.resized;
    const auto lo = r[0].data().cwiseMin(r[1].data()).cwiseMin(r[2].data());
    const auto hi = r[0].data().cwiseMax(r[1].data()).cwiseMax(r[2].data());
    const auto& f = trace.output.data();
    // Slack for the rounding of a three-term weighted sum.
    const double slack = 1e-12 * (1.0 + hi.cwiseAbs().maxCoeff());
    check.require(((f.array() >= lo.array() - slack) &&
                   (f.array() <= hi.array() + slack))
                      .all(),
                  tag + ": fused value within [min, max] of resized levels");
    for (int s = 0; s < kPyramidLevels; ++s) {
      put_feature_map(ar, tag + ".weight" + std::to_string(s + 1),
                      trace.weights[s]);
    }
    put_feature_map(ar, tag + ".output", trace.output);
  }

  std::filesystem::create_directories(config.out_dir);
  ar.save(config.out_dir / "demo_tensors.txt");
  out << "demo mode " << mode << ", " << c << " channels, levels 8/16/32\n";
  out << check.checks() << " invariant checks, " << check.failures()
      << " failures\n";
  out << "wrote " << (config.out_dir / "demo_tensors.txt").string() << '\n';
  return check.failures() == 0 ? kExitOk : kExitFailure;
}

}  // namespace abcd::cli
