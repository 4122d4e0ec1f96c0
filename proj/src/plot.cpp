#include <algorithm>
#include <array>
#include <cstdio>
#include <limits>
#include <string>

#include "quartet/io.hpp"

namespace quartet {

namespace {

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                  "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const PointCloud& cloud, const std::string& title,
                       const std::string& comment) {
  constexpr double kPanel = 300, kMargin = 20, kTop = 40;
  constexpr std::array<std::array<int, 2>, 3> kAxes = {{{0, 1}, {0, 2}, {1, 2}}};
  constexpr std::array<const char*, 3> kNames = {"XY", "XZ", "YZ"};

  Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 hi = -lo;
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = cloud.empty() ? 1.0 : std::max((hi - lo).maxCoeff(), 1e-12);
  const double scale = (kPanel - 2 * kMargin) / extent;

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\">\n",
                3 * kPanel, kPanel + kTop);
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comment.empty()) {
    std::string c = comment;
    for (auto pos = c.find("--"); pos != std::string::npos; pos = c.find("--")) c.replace(pos, 2, "- ");
    svg += "<!-- " + c + " -->\n";
  }
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
         "</text>\n";
  for (int panel = 0; panel < 3; ++panel) {
    const double ox = panel * kPanel;
    const int ax = kAxes[panel][0], ay = kAxes[panel][1];
    std::snprintf(buf, sizeof buf,
                  "<g><rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                  "stroke=\"#ccc\"/>\n<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" "
                  "font-size=\"11\">%s</text>\n",
                  ox, kTop, kPanel, kPanel, ox + 5, kTop + 14, kNames[panel]);
    svg += buf;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Point3& p = cloud.points[i];
      const double x = ox + kMargin + (p[ax] - lo[ax]) * scale;
      const double y = kTop + kPanel - kMargin - (p[ay] - lo[ay]) * scale;
      const int label = cloud.has_labels() ? cloud.labels[i] : 0;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"1.5\" fill=\"%s\"/>\n", x,
                    y, kPalette[static_cast<std::size_t>(label) % kPalette.size()]);
      svg += buf;
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace quartet
