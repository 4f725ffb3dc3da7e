#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>

#include "abcd/cli.hpp"
#include "abcd/errors.hpp"

namespace abcd::cli {
namespace {

// Parameter ranges for ops given without an explicit value.
constexpr int kHueDrawDegrees = 25;
constexpr double kExposureDrawLo = 0.75;
constexpr int kExposureDrawSteps = 50;  // 0.01 increments up to 1.25

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& l : lines) os << l << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<std::string> xml_stems(const std::filesystem::path& dir) {
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

SplitSpec parse_ratios(const std::string& text, std::uint64_t seed) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(':', start), text.size());
    double v = 0.0;
    const auto res = std::from_chars(text.data() + start, text.data() + end, v);
    if (end == start || res.ec != std::errc() || res.ptr != text.data() + end) {
      throw ConfigError("--ratios expects TRAIN:VAL:TEST, got '" + text + "'");
    }
    parts.push_back(v);
    start = end + 1;
  }
  if (parts.size() != 3) {
    throw ConfigError("--ratios expects three values, got '" + text + "'");
  }
  const double total = parts[0] + parts[1] + parts[2];
  if (!(total > 0.0)) throw ConfigError("--ratios must be positive");
  SplitSpec spec;
  spec.train = parts[0] / total;
  spec.val = parts[1] / total;
  spec.test = parts[2] / total;
  spec.seed = seed;
  return spec;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// An op name without a parameter draws one per copy.
AugmentOp realize(const std::string& spec, Rng& rng) {
  if (spec == "rot90") return Rot90{static_cast<int>(rng.between(1, 3))};
  if (spec == "hue") {
    return HueShift{static_cast<double>(
        rng.between(-kHueDrawDegrees, kHueDrawDegrees))};
  }
  if (spec == "exposure") {
    return Exposure{kExposureDrawLo +
                    0.01 * static_cast<double>(rng.between(0, kExposureDrawSteps))};
  }
  return parse_augment_op(spec);
}

}  // namespace

int cmd_split(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.paths.size() != 1) {
    err << "usage: abcd split <annotation_dir | id_list_file> [options]\n";
    return kExitUsage;
  }
  const std::filesystem::path input = config.paths[0];
  std::vector<std::string> ids;
  if (std::filesystem::is_directory(input)) {
    ids = xml_stems(input);
  } else {
    ids = read_lines(input);
  }
  const SplitSpec spec = parse_ratios(config.ratios, config.seed);
  const DatasetSplit split = split_dataset(std::move(ids), spec);
  std::filesystem::create_directories(config.out_dir);
  write_lines(config.out_dir / "train.txt", split.train);
  write_lines(config.out_dir / "val.txt", split.val);
  write_lines(config.out_dir / "test.txt", split.test);
  out << "train " << split.train.size() << "\nval " << split.val.size()
      << "\ntest " << split.test.size() << '\n';
  return kExitOk;
}

int cmd_augment(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.paths.size() != 1) {
    err << "usage: abcd augment <dataset_dir> [--ops LIST] [--copies N] "
           "[--ids FILE] [options]\n";
    return kExitUsage;
  }
  if (config.copies < 1) throw ConfigError("--copies must be >= 1");
  if (config.ops.empty()) throw ConfigError("--ops must name at least one op");
  Rng probe(0);
  for (const auto& spec : config.ops) realize(spec, probe);

  const std::filesystem::path dir = config.paths[0];
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::string> ids = xml_stems(dir);
  if (!config.ids_file.empty()) {
    const auto wanted = read_lines(config.ids_file);
    std::erase_if(ids, [&](const std::string& id) {
      return std::find(wanted.begin(), wanted.end(), id) == wanted.end();
    });
  }

  const ClassMap classes;
  Rng rng(config.seed);
  std::filesystem::create_directories(config.out_dir);
  std::size_t written = 0;
  for (const auto& id : ids) {
    std::vector<std::string> warnings;
    VocOptions opts;
    opts.image_id = id;
    AnnotatedImage base =
        parse_voc_xml(read_text(dir / (id + ".xml")), opts, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    const auto image_path = dir / (id + ".ppm");
    if (std::filesystem::exists(image_path)) {
      base.image = load_image(image_path);
      if (base.image->width != base.width || base.image->height != base.height) {
        throw FormatError(id + ": image dims disagree with annotation size");
      }
    } else {
      err << "warning: " << id << ": no .ppm image, writing annotations only\n";
    }
    for (int copy = 0; copy < config.copies; ++copy) {
      const std::string& spec = config.ops[rng.below(config.ops.size())];
      const AugmentOp op = realize(spec, rng);
      AnnotatedImage aug = augment_annotated(base, op);
      const std::string stem = id + "_aug" + std::to_string(copy);
      aug.image_id = stem;
      aug.filename = stem + ".ppm";
      for (auto& a : aug.annotations) a.image_id = stem;
      std::ofstream xml(config.out_dir / (stem + ".xml"), std::ios::binary);
      if (!xml) throw IoError("cannot write " + stem + ".xml");
      xml << write_voc_xml(aug, classes);
      if (aug.image) save_image(config.out_dir / aug.filename, *aug.image);
      out << stem << ' ' << describe(op) << '\n';
      ++written;
    }
  }
  out << "wrote " << written << " augmented samples\n";
  return kExitOk;
}

}  // namespace abcd::cli
