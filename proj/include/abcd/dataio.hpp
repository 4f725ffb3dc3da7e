// Dataset ingestion and preparation: VOC-style XML annotations, binary PPM
// images, seeded train/val/test splits, box-consistent augmentation and the
// JSON-lines prediction interchange format.
#ifndef ABCD_DATAIO_HPP
#define ABCD_DATAIO_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "abcd/box.hpp"
#include "abcd/eval.hpp"
#include "abcd/random.hpp"

namespace abcd {

// ---------------------------------------------------------------------------
// Classes

class ClassMap {
 public:
  // RBC = 0, WBC = 1, Platelets = 2.
  ClassMap();
  explicit ClassMap(std::vector<std::string> names);

  std::optional<int> id(std::string_view name) const;
  const std::string& name(int id) const;
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Images

// 8-bit RGB, row-major, interleaved.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  ImageRGB() = default;
  ImageRGB(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int ch) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }
  std::uint8_t at(int x, int y, int ch) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + ch];
  }

  friend bool operator==(const ImageRGB&, const ImageRGB&) = default;
};

// Binary P6 with maxval 255. Header comments are accepted on decode; encode
// writes "P6\n<w> <h>\n255\n".
std::string encode_ppm(const ImageRGB& img);
ImageRGB decode_ppm(std::string_view bytes);

ImageRGB load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const ImageRGB& img);

// ---------------------------------------------------------------------------
// Annotations

struct AnnotatedImage {
  std::string image_id;
  std::string filename;  // the <filename> element, may be empty
  int width = 0;
  int height = 0;
  std::optional<ImageRGB> image;
  std::vector<GroundTruth> annotations;
};

enum class UnknownClassPolicy { kSkip, kError };

struct VocOptions {
  ClassMap classes;
  UnknownClassPolicy unknown = UnknownClassPolicy::kSkip;
  // Used as the image id; when empty the stem of <filename> is used.
  std::string image_id;
};

// Reads annotation/size/{width,height} and every annotation/object with a
// name and bndbox/{xmin,ymin,xmax,ymax}. Boxes are clamped to the image;
// boxes that end up empty are dropped. Both cases append a warning.
AnnotatedImage parse_voc_xml(std::string_view text, const VocOptions& opts = {},
                             std::vector<std::string>* warnings = nullptr);

std::string write_voc_xml(const AnnotatedImage& img, const ClassMap& classes);

// Every *.xml in `dir`, sorted by file name; image id = file stem.
std::vector<AnnotatedImage> load_annotation_dir(
    const std::filesystem::path& dir, const VocOptions& opts = {},
    std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Split

struct SplitSpec {
  double train = 0.7;
  double val = 0.2;
  double test = 0.1;
  std::uint64_t seed = kDefaultSeed;

  // Ratios positive and summing to 1 within 1e-9.
  void validate() const;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Sorts the ids, applies a seeded Fisher-Yates shuffle, then cuts at
// round(train * N) and round((train + val) * N).
DatasetSplit split_dataset(std::vector<std::string> ids, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Augmentation

struct HFlip {};
struct VFlip {};
// Counter-clockwise quarter turns, k in {1, 2, 3}.
struct Rot90 {
  int k = 1;
};
// Hue rotation in degrees, [-180, 180].
struct HueShift {
  double degrees = 0.0;
};
// Per-channel gain, > 0.
struct Exposure {
  double factor = 1.0;
};

using AugmentOp = std::variant<HFlip, VFlip, Rot90, HueShift, Exposure>;

void validate(const AugmentOp& op);

// "hflip", "vflip", "rot90:<k>", "hue:<deg>", "exposure:<factor>".
AugmentOp parse_augment_op(std::string_view text);
std::string describe(const AugmentOp& op);

struct Augmented {
  ImageRGB image;
  std::vector<Box<double>> boxes;
};

Augmented augment(const ImageRGB& img, std::span<const Box<double>> boxes,
                  const AugmentOp& op);

// Box-only variant for annotation files without pixels.
std::vector<Box<double>> augment_boxes(int width, int height,
                                       std::span<const Box<double>> boxes,
                                       const AugmentOp& op);

// Output (width, height) after `op`.
std::pair<int, int> augmented_size(int width, int height, const AugmentOp& op);

AnnotatedImage augment_annotated(const AnnotatedImage& img,
                                 const AugmentOp& op);

// Hexcone model on the 8-bit scale: hue in [0, 360), s in [0, 1], v in
// [0, 255].
struct Hsv {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);
// Rounded half-up to 8 bits.
std::array<std::uint8_t, 3> hsv_to_rgb(const Hsv& hsv);

// ---------------------------------------------------------------------------
// Predictions

// One JSON object per line:
//   {"image_id": str, "class": str, "score": float, "bbox": [x0, y0, x1, y1]}
// Blank lines are skipped. Scores must lie in [0, 1].
std::vector<Detection> parse_predictions(std::istream& is,
                                         const ClassMap& classes);
void format_predictions(std::ostream& os, std::span<const Detection> dets,
                        const ClassMap& classes);

std::vector<Detection> read_predictions(const std::filesystem::path& path,
                                        const ClassMap& classes = {});
void write_predictions(std::span<const Detection> dets,
                       const std::filesystem::path& path,
                       const ClassMap& classes = {});

}  // namespace abcd

#endif  // ABCD_DATAIO_HPP
