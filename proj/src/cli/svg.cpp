#include <cstdio>
#include <sstream>

#include "abcd/cli.hpp"

namespace abcd::cli {
namespace {

constexpr double kSize = 400.0;
constexpr double kMargin = 40.0;

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_pr_svg(const PRCurve& curve, const std::string& title) {
  const double plot = kSize - 2 * kMargin;
  const auto px = [&](double recall) { return kMargin + recall * plot; };
  const auto py = [&](double precision) {
    return kSize - kMargin - precision * plot;
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize
     << "\" height=\"" << kSize << "\" viewBox=\"0 0 " << kSize << ' ' << kSize
     << "\">\n";
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
     << plot << "\" height=\"" << plot
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  os << "<text x=\"" << kSize / 2 << "\" y=\"" << kMargin / 2
     << "\" text-anchor=\"middle\" font-size=\"14\">" << title << " AP "
     << (curve.ap ? coord(*curve.ap) : std::string("undefined")) << "</text>\n";
  os << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 8
     << "\" text-anchor=\"middle\" font-size=\"12\">recall</text>\n";
  os << "<text x=\"12\" y=\"" << kSize / 2
     << "\" font-size=\"12\" transform=\"rotate(-90 12 " << kSize / 2
     << ")\">precision</text>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  bool first = true;
  for (const auto& p : curve.points) {
    if (!first) os << ' ';
    os << coord(px(p.recall)) << ',' << coord(py(p.precision));
    first = false;
  }
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace abcd::cli
