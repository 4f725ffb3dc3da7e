#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "abcd/dataio.hpp"
#include "abcd/errors.hpp"

namespace abcd {
namespace {

namespace pt = boost::property_tree;

double read_number(const pt::ptree& node, const std::string& path,
                   const std::string& context) {
  const auto child = node.get_optional<std::string>(path);
  if (!child) throw ParseError(context + ": missing <" + path + ">", 0);
  std::string text = *child;
  text.erase(0, text.find_first_not_of(" \t\r\n"));
  text.erase(text.find_last_not_of(" \t\r\n") + 1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ParseError(context + ": <" + path + "> is not a number: '" + text +
                         "'",
                     0);
  }
  return value;
}

std::string format_coord(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings != nullptr) warnings->push_back(std::move(msg));
}

}  // namespace

ClassMap::ClassMap() : names_{"RBC", "WBC", "Platelets"} {}

ClassMap::ClassMap(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ConfigError("class map needs at least one class");
}

std::optional<int> ClassMap::id(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<int>(it - names_.begin());
}

const std::string& ClassMap::name(int id) const {
  if (id < 0 || id >= size()) {
    throw ConfigError("class id " + std::to_string(id) + " out of range");
  }
  return names_[static_cast<std::size_t>(id)];
}

AnnotatedImage parse_voc_xml(std::string_view text, const VocOptions& opts,
                             std::vector<std::string>* warnings) {
  pt::ptree tree;
  try {
    std::istringstream is{std::string(text)};
    pt::read_xml(is, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed xml: " + e.message(), e.line());
  }
  const auto root = tree.get_child_optional("annotation");
  if (!root) throw ParseError("missing <annotation> root element", 0);

  AnnotatedImage out;
  out.filename = root->get<std::string>("filename", "");
  out.image_id = opts.image_id.empty()
                     ? std::filesystem::path(out.filename).stem().string()
                     : opts.image_id;
  const std::string ctx =
      "annotation '" + (out.image_id.empty() ? "?" : out.image_id) + "'";
  out.width = static_cast<int>(read_number(*root, "size.width", ctx));
  out.height = static_cast<int>(read_number(*root, "size.height", ctx));
  if (out.width <= 0 || out.height <= 0) {
    throw ParseError(ctx + ": image size must be positive", 0);
  }

  const double w = out.width;
  const double h = out.height;
  for (const auto& [tag, obj] : *root) {
    if (tag != "object") continue;
    const std::string name = obj.get<std::string>("name", "");
    const auto cls = opts.classes.id(name);
    if (!cls) {
      if (opts.unknown == UnknownClassPolicy::kError) {
        throw ParseError(ctx + ": unknown class '" + name + "'", 0);
      }
      warn(warnings, ctx + ": skipping object of unknown class '" + name + "'");
      continue;
    }
    Box<double> raw{read_number(obj, "bndbox.xmin", ctx),
                    read_number(obj, "bndbox.ymin", ctx),
                    read_number(obj, "bndbox.xmax", ctx),
                    read_number(obj, "bndbox.ymax", ctx)};
    const Box<double> box{std::clamp(raw.xmin, 0.0, w),
                          std::clamp(raw.ymin, 0.0, h),
                          std::clamp(raw.xmax, 0.0, w),
                          std::clamp(raw.ymax, 0.0, h)};
    if (box != raw) {
      warn(warnings, ctx + ": clamped " + name + " box to image bounds");
    }
    if (!(box.xmax > box.xmin && box.ymax > box.ymin)) {
      warn(warnings, ctx + ": dropping empty " + name + " box");
      continue;
    }
    out.annotations.push_back({out.image_id, *cls, box});
  }
  return out;
}

std::string write_voc_xml(const AnnotatedImage& img, const ClassMap& classes) {
  std::ostringstream os;
  os << "<annotation>\n";
  os << "\t<filename>" << img.filename << "</filename>\n";
  os << "\t<size>\n";
  os << "\t\t<width>" << img.width << "</width>\n";
  os << "\t\t<height>" << img.height << "</height>\n";
  os << "\t\t<depth>3</depth>\n";
  os << "\t</size>\n";
  for (const auto& a : img.annotations) {
    os << "\t<object>\n";
    os << "\t\t<name>" << classes.name(a.class_id) << "</name>\n";
    os << "\t\t<bndbox>\n";
    os << "\t\t\t<xmin>" << format_coord(a.box.xmin) << "</xmin>\n";
    os << "\t\t\t<ymin>" << format_coord(a.box.ymin) << "</ymin>\n";
    os << "\t\t\t<xmax>" << format_coord(a.box.xmax) << "</xmax>\n";
    os << "\t\t\t<ymax>" << format_coord(a.box.ymax) << "</ymax>\n";
    os << "\t\t</bndbox>\n";
    os << "\t</object>\n";
  }
  os << "</annotation>\n";
  return os.str();
}

std::vector<AnnotatedImage> load_annotation_dir(
    const std::filesystem::path& dir, const VocOptions& opts,
    std::vector<std::string>* warnings) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<AnnotatedImage> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    std::ifstream is(f);
    if (!is) throw IoError("cannot open " + f.string());
    const std::string text((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
    VocOptions file_opts = opts;
    file_opts.image_id = f.stem().string();
    try {
      out.push_back(parse_voc_xml(text, file_opts, warnings));
    } catch (const ParseError& e) {
      throw ParseError(f.filename().string() + ": " + e.what(), 0);
    }
  }
  return out;
}

}  // namespace abcd
