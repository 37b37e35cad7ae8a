#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "copysample/core/dataset.hpp"
#include "copysample/oracles/analytic.hpp"

namespace copysample {

struct PlotStyle {
  int size = 480;          // plot area, pixels
  int margin = 40;
  double marker_radius = 2.5;
  int boundary_grid = 200;  // cells per axis for the boundary trace
};

namespace svg_detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* color(int label) {
  static constexpr std::array<const char*, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                      "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return palette[static_cast<std::size_t>(label) % palette.size()];
}

/// Segments where the label changes between neighbouring grid corners.
/// Each cell contributes the segment joining the midpoints of its edges that
/// cross a boundary (two segments for saddle cells).
inline std::string boundary_path(const AnalyticOracle& oracle, int grid, double x0, double y0, double side) {
  const int m = grid + 1;
  std::vector<int> lab(static_cast<std::size_t>(m * m));
  Point z(2);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      z << static_cast<double>(i) / grid, static_cast<double>(j) / grid;
      lab[static_cast<std::size_t>(j * m + i)] = oracle.label_of(z).value;
    }
  auto at = [&](int i, int j) { return lab[static_cast<std::size_t>(j * m + i)]; };
  auto px = [&](double u) { return x0 + u * side; };
  auto py = [&](double v) { return y0 + (1.0 - v) * side; };

  std::ostringstream d;
  const double h = 1.0 / grid;
  for (int j = 0; j < grid; ++j) {
    for (int i = 0; i < grid; ++i) {
      const int a = at(i, j), b = at(i + 1, j), c = at(i + 1, j + 1), e = at(i, j + 1);
      std::vector<std::array<double, 2>> mids;
      const double u = i * h, v = j * h;
      if (a != b) mids.push_back({u + h / 2, v});
      if (b != c) mids.push_back({u + h, v + h / 2});
      if (c != e) mids.push_back({u + h / 2, v + h});
      if (e != a) mids.push_back({u, v + h / 2});
      for (std::size_t s = 0; s + 1 < mids.size(); s += 2) {
        d << 'M' << num(px(mids[s][0])) << ',' << num(py(mids[s][1])) << 'L' << num(px(mids[s + 1][0])) << ','
          << num(py(mids[s + 1][1]));
      }
    }
  }
  return d.str();
}

}  // namespace svg_detail

/// Scatter of a 2-D dataset over [0,1]^2, one circle per sample coloured by
/// label, with the oracle's true boundary traced when one is given.
inline std::string render_svg(const SyntheticDataset& ds, const AnalyticOracle* oracle, const PlotStyle& style = {}) {
  using svg_detail::num;
  if (ds.dim != 2) throw UnsupportedError("plot_2d: dataset dimension is " + std::to_string(ds.dim) + ", need 2");
  if (oracle && oracle->dim() != 2) throw UnsupportedError("plot_2d: oracle dimension must be 2");
  const double x0 = style.margin, y0 = style.margin, side = style.size;
  const int total = style.size + 2 * style.margin;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total << "\" height=\"" << total << "\" viewBox=\"0 0 "
     << total << ' ' << total << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << total << "\" height=\"" << total << "\" fill=\"white\"/>\n";
  os << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(side) << "\" height=\"" << num(side) << "\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double f = t / 4.0;
    os << "<line x1=\"" << num(x0 + f * side) << "\" y1=\"" << num(y0 + side) << "\" x2=\"" << num(x0 + f * side) << "\" y2=\""
       << num(y0 + side + 5) << "\"/>\n";
    os << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(y0 + (1 - f) * side) << "\" x2=\"" << num(x0) << "\" y2=\""
       << num(y0 + (1 - f) * side) << "\"/>\n";
  }
  os << "</g>\n";
  os << "<g id=\"ticks\" font-family=\"sans-serif\" font-size=\"10\" fill=\"black\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double f = t / 4.0;
    os << "<text x=\"" << num(x0 + f * side) << "\" y=\"" << num(y0 + side + 17) << "\" text-anchor=\"middle\">" << num(f)
       << "</text>\n";
    os << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(y0 + (1 - f) * side + 3) << "\" text-anchor=\"end\">" << num(f)
       << "</text>\n";
  }
  os << "</g>\n";
  if (oracle) {
    os << "<path id=\"boundary\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\" d=\""
       << svg_detail::boundary_path(*oracle, style.boundary_grid, x0, y0, side) << "\"/>\n";
  }
  os << "<g id=\"samples\" stroke=\"none\">\n";
  for (const auto& s : ds.samples) {
    os << "<circle cx=\"" << num(x0 + s.point[0] * side) << "\" cy=\"" << num(y0 + (1 - s.point[1]) * side) << "\" r=\""
       << num(style.marker_radius) << "\" fill=\"" << svg_detail::color(s.label.value) << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

inline void plot_2d(const SyntheticDataset& ds, const AnalyticOracle* oracle, const std::filesystem::path& path,
                    const PlotStyle& style = {}) {
  const std::string text = render_svg(ds, oracle, style);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os << text;
}

}  // namespace copysample
