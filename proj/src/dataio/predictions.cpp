#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "abcd/dataio.hpp"
#include "abcd/errors.hpp"

namespace abcd {
namespace {

using Json = nlohmann::ordered_json;

Detection parse_record(const std::string& line, std::size_t lineno,
                       const ClassMap& classes) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid json: ") + e.what(), lineno);
  }
  if (!j.is_object()) throw ParseError("record must be a json object", lineno);
  const auto field = [&](const char* key) -> const Json& {
    const auto it = j.find(key);
    if (it == j.end()) {
      throw ParseError(std::string("missing field '") + key + "'", lineno);
    }
    return *it;
  };
  const Json& image_id = field("image_id");
  const Json& cls = field("class");
  const Json& score = field("score");
  const Json& bbox = field("bbox");
  if (!image_id.is_string()) throw ParseError("image_id must be a string", lineno);
  if (!cls.is_string()) throw ParseError("class must be a string", lineno);
  if (!score.is_number()) throw ParseError("score must be a number", lineno);
  if (!bbox.is_array() || bbox.size() != 4 ||
      !std::all_of(bbox.begin(), bbox.end(),
                   [](const Json& v) { return v.is_number(); })) {
    throw ParseError("bbox must be an array of four numbers", lineno);
  }
  const auto class_id = classes.id(cls.get<std::string>());
  if (!class_id) {
    throw ParseError("unknown class '" + cls.get<std::string>() + "'", lineno);
  }
  Detection d;
  d.image_id = image_id.get<std::string>();
  d.class_id = *class_id;
  d.score = score.get<double>();
  d.box = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
           bbox[3].get<double>()};
  if (!std::isfinite(d.score) || d.score < 0.0 || d.score > 1.0) {
    throw ValidationError("score must lie in [0, 1]", lineno);
  }
  if (!d.box.valid()) {
    throw ValidationError("bbox must satisfy xmin <= xmax and ymin <= ymax",
                          lineno);
  }
  return d;
}

}  // namespace

std::vector<Detection> parse_predictions(std::istream& is,
                                         const ClassMap& classes) {
  std::vector<Detection> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_record(line, lineno, classes));
  }
  return out;
}

void format_predictions(std::ostream& os, std::span<const Detection> dets,
                        const ClassMap& classes) {
  for (const auto& d : dets) {
    Json j;
    j["image_id"] = d.image_id;
    j["class"] = classes.name(d.class_id);
    j["score"] = d.score;
    j["bbox"] = {d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax};
    os << j.dump() << '\n';
  }
}

std::vector<Detection> read_predictions(const std::filesystem::path& path,
                                        const ClassMap& classes) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return parse_predictions(is, classes);
}

void write_predictions(std::span<const Detection> dets,
                       const std::filesystem::path& path,
                       const ClassMap& classes) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  format_predictions(os, dets, classes);
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace abcd
