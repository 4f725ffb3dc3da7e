#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "abcd/cli.hpp"
#include "abcd/errors.hpp"
#include "abcd/params_io.hpp"

namespace abcd::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "abcd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("abcd_cli_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string str(const std::string& sub = "") const { return (path_ / sub).string(); }

 private:
  fs::path path_;
};

// Three tiny annotated images with pixels.
void write_dataset(const fs::path& dir) {
  fs::create_directories(dir);
  Rng rng(7);
  for (int i = 0; i < 3; ++i) {
    AnnotatedImage img;
    img.image_id = "im" + std::to_string(i);
    img.filename = img.image_id + ".jpg";
    img.width = 32;
    img.height = 24;
    img.annotations = {{img.image_id, 0, {2, 3, 12, 9}},
                       {img.image_id, 1, {20, 4, 31, 20}}};
    std::ofstream(dir / (img.image_id + ".xml")) << write_voc_xml(img, ClassMap{});
    ImageRGB px(32, 24);
    for (auto& p : px.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    save_image(dir / (img.image_id + ".ppm"), px);
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"eval", "--iou", "1.5", "a", "b"}).code, kExitUsage);
  EXPECT_EQ(invoke({"eval", "--range", "0.5:0.9"}).code, kExitUsage);
  EXPECT_EQ(invoke({"eval", "/nonexistent/dir", "/nonexistent.jsonl"}).code,
            kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, ParseRange) {
  RunConfig c;
  parse_range("0.3:0.7:0.1", c);
  EXPECT_EQ(c.range_lo, 0.3);
  EXPECT_EQ(c.range_hi, 0.7);
  EXPECT_EQ(c.range_step, 0.1);
  EXPECT_THROW(parse_range("0.3:0.7", c), ConfigError);
  parse_range("0.7:0.3:0.1", c);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Cli, GradcheckExitCodes) {
  const auto ok = invoke({"gradcheck"});
  EXPECT_EQ(ok.code, kExitOk);
  EXPECT_NE(ok.out.find("xmin"), std::string::npos);
  EXPECT_NE(ok.out.find("ymax"), std::string::npos);
  EXPECT_NE(ok.out.find("result PASS"), std::string::npos);
  EXPECT_EQ(invoke({"gradcheck", "--corrupt-gradient"}).code, kExitFailure);
}

TEST(Cli, SplitOfTen) {
  TempDir t("split");
  {
    std::ofstream ids(t.path() / "ids.txt");
    for (int i = 0; i < 10; ++i) ids << "img" << i << '\n';
  }
  const auto r = invoke({"split", "--out", t.str("out"), t.str("ids.txt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(line_count(t.path() / "out" / "train.txt"), 7u);
  EXPECT_EQ(line_count(t.path() / "out" / "val.txt"), 2u);
  EXPECT_EQ(line_count(t.path() / "out" / "test.txt"), 1u);
  const auto first = slurp(t.path() / "out" / "train.txt");
  ASSERT_EQ(invoke({"split", "--out", t.str("out"), t.str("ids.txt")}).code, kExitOk);
  EXPECT_EQ(slurp(t.path() / "out" / "train.txt"), first);
}

TEST(Cli, SplitFromAnnotationDir) {
  TempDir t("split_dir");
  write_dataset(t.path() / "ds");
  const auto r = invoke({"split", "--ratios", "1:1:1", "--out", t.str("out"), t.str("ds")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(line_count(t.path() / "out" / "train.txt"), 1u);
  EXPECT_EQ(line_count(t.path() / "out" / "test.txt"), 1u);
}

TEST(Cli, AugmentHflipFollowsReflection) {
  TempDir t("aug");
  write_dataset(t.path() / "ds");
  const auto r = invoke({"augment", "--ops", "hflip", "--out", t.str("out"), t.str("ds")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto src = parse_voc_xml(slurp(t.path() / "ds" / "im1.xml"));
  const auto aug = parse_voc_xml(slurp(t.path() / "out" / "im1_aug0.xml"));
  ASSERT_EQ(aug.annotations.size(), src.annotations.size());
  for (std::size_t i = 0; i < src.annotations.size(); ++i) {
    const auto& a = src.annotations[i].box;
    const auto& b = aug.annotations[i].box;
    EXPECT_EQ(b.xmin, src.width - a.xmax);
    EXPECT_EQ(b.xmax, src.width - a.xmin);
    EXPECT_EQ(b.ymin, a.ymin);
    EXPECT_EQ(b.ymax, a.ymax);
  }
  const auto img = load_image(t.path() / "ds" / "im1.ppm");
  const auto flipped = load_image(t.path() / "out" / "im1_aug0.ppm");
  EXPECT_EQ(flipped.at(0, 5, 1), img.at(31, 5, 1));
}

TEST(Cli, AugmentIsDeterministic) {
  TempDir t("aug_det");
  write_dataset(t.path() / "ds");
  ASSERT_EQ(invoke({"augment", "--copies", "3", "--out", t.str("a"), t.str("ds")}).code,
            kExitOk);
  ASSERT_EQ(invoke({"augment", "--copies", "3", "--out", t.str("b"), t.str("ds")}).code,
            kExitOk);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(t.path() / "a")) {
    EXPECT_EQ(slurp(e.path()), slurp(t.path() / "b" / e.path().filename()));
    ++n;
  }
  EXPECT_EQ(n, 18u);
}

TEST(Cli, AugmentRejectsBadOps) {
  TempDir t("aug_bad");
  write_dataset(t.path() / "ds");
  EXPECT_EQ(invoke({"augment", "--ops", "blur", "--out", t.str("o"), t.str("ds")}).code,
            kExitUsage);
}

TEST(Cli, DemoModes) {
  TempDir t("demo");
  for (const std::string mode : {"zero", "equal", "random"}) {
    const auto r = invoke({"demo", "--mode", mode, "--channels", "8", "--out", t.str(mode)});
    EXPECT_EQ(r.code, kExitOk) << mode << r.err;
    EXPECT_NE(r.out.find(" 0 failures"), std::string::npos) << mode;
    const auto ar = TensorArchive::load(t.path() / mode / "demo_tensors.txt");
    EXPECT_TRUE(ar.contains("asff3.output"));
    EXPECT_TRUE(ar.contains("level1.cbam.spatial_weights"));
  }
  const auto zero = TensorArchive::load(t.path() / "zero" / "demo_tensors.txt");
  const auto in = get_feature_map(zero, "level2.input");
  const auto out = get_feature_map(zero, "level2.cbam.output");
  EXPECT_LE((out.data() - 0.25 * in.data()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(invoke({"demo", "--mode", "bogus"}).code, kExitUsage);
}

TEST(Cli, BenchSmoke) {
  TempDir t("bench");
  const auto r = invoke({"bench", "--reps", "3", "--out", t.str()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream csv(slurp(t.path() / "bench.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "op,median_s,p10_s,p90_s,ops_per_s");
  int rows = 0;
  while (std::getline(csv, line)) {
    const double ops = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_TRUE(std::isfinite(ops));
    EXPECT_GT(ops, 0.0);
    ++rows;
  }
  EXPECT_GE(rows, 8);
}

TEST(Cli, BenchPayloadDeterministic) {
  const auto a = make_bench_payload(99), b = make_bench_payload(99);
  EXPECT_EQ(a.detections, b.detections);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  EXPECT_EQ(a.feature, b.feature);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.cbam.mlp().w0(), b.cbam.mlp().w0());
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  EXPECT_EQ(a.pairs.back().pred, b.pairs.back().pred);
  EXPECT_NE(make_bench_payload(100).detections, a.detections);
}

TEST(Cli, EvalPerfectAndEmpty) {
  TempDir t("eval");
  write_dataset(t.path() / "ds");
  {
    std::vector<Detection> perfect;
    for (const auto& img : load_annotation_dir(t.path() / "ds")) {
      for (const auto& g : img.annotations) {
        perfect.push_back({g.image_id, g.class_id, 0.9, g.box});
      }
    }
    write_predictions(perfect, t.path() / "perfect.jsonl");
    std::ofstream(t.path() / "empty.jsonl");
  }
  const auto p = invoke({"eval", "--svg", "--out", t.str("p"), t.str("ds"),
                         t.str("perfect.jsonl")});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  EXPECT_NE(p.out.find("mAP@0.50: 1.000000"), std::string::npos) << p.out;
  EXPECT_TRUE(fs::exists(t.path() / "p" / "report.txt"));
  EXPECT_TRUE(fs::exists(t.path() / "p" / "confusion.csv"));
  EXPECT_TRUE(fs::exists(t.path() / "p" / "pr_RBC.csv"));
  EXPECT_TRUE(fs::exists(t.path() / "p" / "pr_WBC.svg"));
  EXPECT_EQ(slurp(t.path() / "p" / "pr_RBC.csv").substr(0, 17), "recall,precision\n");

  const auto e = invoke({"eval", "--out", t.str("e"), t.str("ds"), t.str("empty.jsonl")});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_NE(e.err.find("warning"), std::string::npos);
  EXPECT_NE(e.out.find("mAP@0.50: 0.000000"), std::string::npos) << e.out;
}

TEST(Cli, SeedFromEnvironment) {
  TempDir t("env");
  {
    std::ofstream ids(t.path() / "ids.txt");
    for (int i = 0; i < 30; ++i) ids << "img" << i << '\n';
  }
  ASSERT_EQ(invoke({"split", "--seed", "5", "--out", t.str("a"), t.str("ids.txt")}).code, 0);
  setenv("ABCD_SEED", "5", 1);
  ASSERT_EQ(invoke({"split", "--out", t.str("b"), t.str("ids.txt")}).code, 0);
  unsetenv("ABCD_SEED");
  EXPECT_EQ(slurp(t.path() / "a" / "train.txt"), slurp(t.path() / "b" / "train.txt"));
}

}  // namespace
}  // namespace abcd::cli
