#include "ava/svg.hpp"

#include "ava/common.hpp"

#include <algorithm>
#include <fstream>

namespace ava {

void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<double>& xs,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  if (xs.empty() || series.empty()) throw Error("svg chart: empty data");
  const int w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double x_min = *std::min_element(xs.begin(), xs.end());
  double x_max = *std::max_element(xs.begin(), xs.end());
  double y_min = std::numeric_limits<double>::max(), y_max = -y_min;
  for (const auto& [name, ys] : series)
    for (double y : ys) {
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  auto px = [&](double x) {
    return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr);
  };
  auto py = [&](double y) {
    return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb);
  };

  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
    << "' font-family='sans-serif' font-size='12'>\n";
  f << "<rect width='100%' height='100%' fill='white'/>\n";
  f << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='15'>"
    << title << "</text>\n";
  f << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
    << h - mb << "' stroke='black'/>\n";
  f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
    << "' stroke='black'/>\n";
  f << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 12
    << "' text-anchor='middle'>" << x_label << "</text>\n";
  f << "<text x='18' y='" << (mt + h - mb) / 2
    << "' text-anchor='middle' transform='rotate(-90 18 " << (mt + h - mb) / 2
    << ")'>" << y_label << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = y_min + (y_max - y_min) * t / 4.0;
    f << "<text x='" << ml - 6 << "' y='" << py(yv) + 4
      << "' text-anchor='end'>" << yv << "</text>\n";
    const double xv = x_min + (x_max - x_min) * t / 4.0;
    f << "<text x='" << px(xv) << "' y='" << h - mb + 16 << "' text-anchor='middle'>"
      << xv << "</text>\n";
  }
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int ci = 0;
  for (const auto& [name, ys] : series) {
    const char* color = colors[ci % 4];
    f << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (size_t i = 0; i < xs.size() && i < ys.size(); ++i)
      f << px(xs[i]) << ',' << py(ys[i]) << ' ';
    f << "'/>\n";
    for (size_t i = 0; i < xs.size() && i < ys.size(); ++i)
      f << "<circle cx='" << px(xs[i]) << "' cy='" << py(ys[i])
        << "' r='3' fill='" << color << "'/>\n";
    f << "<text x='" << w - mr - 6 << "' y='" << mt + 16 * ci
      << "' text-anchor='end' fill='" << color << "'>" << name << "</text>\n";
    ++ci;
  }
  f << "</svg>\n";
}

}  // namespace ava
