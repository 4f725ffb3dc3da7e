#include <cctype>
#include <fstream>
#include <iterator>

#include "abcd/dataio.hpp"
#include "abcd/errors.hpp"

namespace abcd {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal integer.
  long next_int(const char* what) {
    skip_separators();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw FormatError(std::string("ppm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) {
      throw FormatError(std::string("ppm: missing or malformed ") + what);
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  void single_whitespace() {
    if (pos_ >= bytes_.size() ||
        !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("ppm: expected whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

ImageRGB::ImageRGB(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw ShapeError("image dims must be positive");
  pixels.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

std::string encode_ppm(const ImageRGB& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
    throw ShapeError("image pixel buffer does not match its dims");
  }
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

ImageRGB decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError("ppm: bad magic, expected P6");
  }
  HeaderReader reader(bytes);
  const long width = reader.next_int("width");
  const long height = reader.next_int("height");
  const long maxval = reader.next_int("maxval");
  if (width <= 0 || height <= 0) throw FormatError("ppm: dims must be positive");
  if (maxval != 255) {
    throw FormatError("ppm: only maxval 255 is supported, got " +
                      std::to_string(maxval));
  }
  reader.single_whitespace();
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - reader.pos() < need) {
    throw FormatError("ppm: truncated raster, expected " +
                      std::to_string(need) + " bytes");
  }
  ImageRGB img(static_cast<int>(width), static_cast<int>(height));
  const auto* raster =
      reinterpret_cast<const std::uint8_t*>(bytes.data() + reader.pos());
  std::copy(raster, raster + need, img.pixels.begin());
  return img;
}

ImageRGB load_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

void save_image(const std::filesystem::path& path, const ImageRGB& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_ppm(img);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace abcd
