#include <algorithm>
#include <charconv>
#include <cmath>

#include "abcd/dataio.hpp"
#include "abcd/errors.hpp"

namespace abcd {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::uint8_t round_to_byte(double x) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(x + 0.5), 0.0, 255.0));
}

ImageRGB rotate_quarter(const ImageRGB& src) {
  // Counter-clockwise: source (x, y) lands at (y, W - 1 - x).
  ImageRGB out(src.height, src.width);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        out.at(y, src.width - 1 - x, ch) = src.at(x, y, ch);
      }
    }
  }
  return out;
}

double parse_param(std::string_view text, std::string_view op) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() ||
      res.ptr != text.data() + text.size()) {
    throw ConfigError("augment op " + std::string(op) + ": bad parameter '" +
                      std::string(text) + "'");
  }
  return value;
}

}  // namespace

void validate(const AugmentOp& op) {
  std::visit(Overloaded{
                 [](const HFlip&) {},
                 [](const VFlip&) {},
                 [](const Rot90& r) {
                   if (r.k < 1 || r.k > 3) {
                     throw ConfigError("rot90: k must be 1, 2 or 3");
                   }
                 },
                 [](const HueShift& s) {
                   if (!(s.degrees >= -180.0 && s.degrees <= 180.0)) {
                     throw ConfigError("hue shift must lie in [-180, 180]");
                   }
                 },
                 [](const Exposure& e) {
                   if (!(e.factor > 0.0) || !std::isfinite(e.factor)) {
                     throw ConfigError("exposure factor must be finite and > 0");
                   }
                 },
             },
             op);
}

AugmentOp parse_augment_op(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view param =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  AugmentOp op;
  if (name == "hflip" && colon == std::string_view::npos) {
    op = HFlip{};
  } else if (name == "vflip" && colon == std::string_view::npos) {
    op = VFlip{};
  } else if (name == "rot90") {
    const double k = param.empty() ? 1.0 : parse_param(param, name);
    if (k != std::floor(k)) throw ConfigError("rot90: k must be an integer");
    op = Rot90{static_cast<int>(k)};
  } else if (name == "hue") {
    op = HueShift{parse_param(param, name)};
  } else if (name == "exposure") {
    op = Exposure{parse_param(param, name)};
  } else {
    throw ConfigError("unknown augment op '" + std::string(text) + "'");
  }
  validate(op);
  return op;
}

std::string describe(const AugmentOp& op) {
  const auto num = [](double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  return std::visit(
      Overloaded{
          [](const HFlip&) { return std::string("hflip"); },
          [](const VFlip&) { return std::string("vflip"); },
          [](const Rot90& r) { return "rot90:" + std::to_string(r.k); },
          [&](const HueShift& s) { return "hue:" + num(s.degrees); },
          [&](const Exposure& e) { return "exposure:" + num(e.factor); },
      },
      op);
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8;
  const double g = g8;
  const double b = b8;
  const double hi = std::max({r, g, b});
  const double lo = std::min({r, g, b});
  const double delta = hi - lo;
  Hsv out;
  out.v = hi;
  out.s = hi > 0.0 ? delta / hi : 0.0;
  if (delta == 0.0) return out;
  double h;
  if (hi == r) {
    h = 60.0 * ((g - b) / delta);
  } else if (hi == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  out.h = h;
  return out;
}

std::array<std::uint8_t, 3> hsv_to_rgb(const Hsv& hsv) {
  const double c = hsv.v * hsv.s;
  const double sector = hsv.h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(sector, 2.0) - 1.0));
  const double m = hsv.v - c;
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  switch (static_cast<int>(sector) % 6) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  return {round_to_byte(r + m), round_to_byte(g + m), round_to_byte(b + m)};
}

std::pair<int, int> augmented_size(int width, int height, const AugmentOp& op) {
  if (const auto* r = std::get_if<Rot90>(&op); r != nullptr && r->k % 2 == 1) {
    return {height, width};
  }
  return {width, height};
}

std::vector<Box<double>> augment_boxes(int width, int height,
                                       std::span<const Box<double>> boxes,
                                       const AugmentOp& op) {
  validate(op);
  const double w = width;
  const double h = height;
  std::vector<Box<double>> out(boxes.begin(), boxes.end());
  std::visit(Overloaded{
                 [&](const HFlip&) {
                   for (auto& b : out) b = {w - b.xmax, b.ymin, w - b.xmin, b.ymax};
                 },
                 [&](const VFlip&) {
                   for (auto& b : out) b = {b.xmin, h - b.ymax, b.xmax, h - b.ymin};
                 },
                 [&](const Rot90& r) {
                   // A quarter turn maps point (x, y) to (y, W - x).
                   double cur_w = w;
                   double cur_h = h;
                   for (int i = 0; i < r.k; ++i) {
                     for (auto& b : out) {
                       b = {b.ymin, cur_w - b.xmax, b.ymax, cur_w - b.xmin};
                     }
                     std::swap(cur_w, cur_h);
                   }
                 },
                 [](const HueShift&) {},
                 [](const Exposure&) {},
             },
             op);
  return out;
}

Augmented augment(const ImageRGB& img, std::span<const Box<double>> boxes,
                  const AugmentOp& op) {
  validate(op);
  Augmented out;
  out.boxes = augment_boxes(img.width, img.height, boxes, op);
  std::visit(
      Overloaded{
          [&](const HFlip&) {
            out.image = ImageRGB(img.width, img.height);
            for (int y = 0; y < img.height; ++y) {
              for (int x = 0; x < img.width; ++x) {
                for (int ch = 0; ch < 3; ++ch) {
                  out.image.at(img.width - 1 - x, y, ch) = img.at(x, y, ch);
                }
              }
            }
          },
          [&](const VFlip&) {
            out.image = ImageRGB(img.width, img.height);
            const std::size_t row = static_cast<std::size_t>(img.width) * 3;
            for (int y = 0; y < img.height; ++y) {
              std::copy_n(img.pixels.begin() + y * row, row,
                          out.image.pixels.begin() + (img.height - 1 - y) * row);
            }
          },
          [&](const Rot90& r) {
            out.image = img;
            for (int i = 0; i < r.k; ++i) out.image = rotate_quarter(out.image);
          },
          [&](const HueShift& s) {
            out.image = img;
            for (std::size_t p = 0; p < img.pixels.size(); p += 3) {
              Hsv hsv = rgb_to_hsv(img.pixels[p], img.pixels[p + 1],
                                   img.pixels[p + 2]);
              double hue = std::fmod(hsv.h + s.degrees, 360.0);
              if (hue < 0.0) hue += 360.0;
              if (hue >= 360.0) hue -= 360.0;
              hsv.h = hue;
              const auto rgb = hsv_to_rgb(hsv);
              std::copy(rgb.begin(), rgb.end(), out.image.pixels.begin() + p);
            }
          },
          [&](const Exposure& e) {
            out.image = img;
            for (auto& v : out.image.pixels) {
              v = round_to_byte(static_cast<double>(v) * e.factor);
            }
          },
      },
      op);
  return out;
}

AnnotatedImage augment_annotated(const AnnotatedImage& img,
                                 const AugmentOp& op) {
  std::vector<Box<double>> boxes;
  boxes.reserve(img.annotations.size());
  for (const auto& a : img.annotations) boxes.push_back(a.box);

  AnnotatedImage out = img;
  std::vector<Box<double>> moved;
  if (img.image) {
    Augmented aug = augment(*img.image, boxes, op);
    out.image = std::move(aug.image);
    moved = std::move(aug.boxes);
  } else {
    moved = augment_boxes(img.width, img.height, boxes, op);
  }
  std::tie(out.width, out.height) = augmented_size(img.width, img.height, op);
  for (std::size_t i = 0; i < moved.size(); ++i) out.annotations[i].box = moved[i];
  return out;
}

}  // namespace abcd
