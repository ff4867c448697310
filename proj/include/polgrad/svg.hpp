#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polgrad {

/// One plotted series; when band_lo/band_hi are nonempty they must match the
/// x grid and are drawn as a translucent band (one standard deviation in the
/// experiment plots).
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band_lo;
  std::vector<double> band_hi;
};

struct SvgChart {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  std::vector<SvgSeries> series;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* svg_color(std::size_t i) {
  static constexpr const char* kPalette[] = {"#3366cc", "#dc3912", "#109618", "#ff9900",
                                             "#990099", "#0099c6", "#dd4477", "#66aa00"};
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

}  // namespace detail

/// Renders a fixed-size line chart as a standalone SVG document. Output bytes
/// are a pure function of the chart description.
inline std::string render_svg(const SvgChart& chart) {
  if (chart.series.empty()) throw std::invalid_argument("render_svg: no series to plot");
  for (const auto& s : chart.series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("render_svg: series '" + s.label + "' is empty or ragged");
    if (!s.band_lo.empty() &&
        (s.band_lo.size() != s.x.size() || s.band_hi.size() != s.x.size()))
      throw std::invalid_argument("render_svg: band of series '" + s.label +
                                  "' does not match its x grid");
    if (chart.log_x)
      for (double v : s.x)
        if (!(v > 0.0))
          throw std::invalid_argument("render_svg: log x-axis requires positive x values");
  }

  const double width = 720, height = 480;
  const double ml = 70, mr = 20, mt = 34, mb = 50;

  auto xt = [&](double v) { return chart.log_x ? std::log10(v) : v; };
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, xt(s.x[i]));
      xmax = std::max(xmax, xt(s.x[i]));
      const double lo = s.band_lo.empty() ? s.y[i] : std::min(s.y[i], s.band_lo[i]);
      const double hi = s.band_hi.empty() ? s.y[i] : std::max(s.y[i], s.band_hi[i]);
      ymin = std::min(ymin, lo);
      ymax = std::max(ymax, hi);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double v) { return ml + (xt(v) - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double v) { return height - mb - (v - ymin) / (ymax - ymin) * (height - mt - mb); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << chart.title << "</text>\n";

  // axes with 5 ticks each
  out << "<g stroke=\"#444\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
      << "\" y2=\"" << height - mb << "\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << height - mb << "\"/>\n";
  out << "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double vx = chart.log_x ? std::pow(10.0, fx) : fx;
    const double sx = ml + (width - ml - mr) * i / 4.0;
    out << "<line x1=\"" << sx << "\" y1=\"" << height - mb << "\" x2=\"" << sx << "\" y2=\""
        << height - mb + 4 << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << sx << "\" y=\"" << height - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::svg_num(vx) << "</text>\n";
    const double vy = ymin + (ymax - ymin) * i / 4.0;
    const double sy = py(vy);
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << sy << "\" x2=\"" << ml << "\" y2=\"" << sy
        << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << sy + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << detail::svg_num(vy) << "</text>\n";
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << chart.xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\">" << chart.ylabel << "</text>\n";

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    const char* color = detail::svg_color(si);
    if (!s.band_lo.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << detail::svg_num(px(s.x[i])) << ',' << detail::svg_num(py(s.band_hi[i])) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;)
        out << detail::svg_num(px(s.x[i])) << ',' << detail::svg_num(py(s.band_lo[i])) << ' ';
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << detail::svg_num(px(s.x[i])) << ',' << detail::svg_num(py(s.y[i])) << ' ';
    out << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(si);
    out << "<rect x=\"" << width - mr - 150 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << width - mr - 135 << "\" y=\"" << ly + 9 << "\" font-size=\"11\">"
        << s.label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace polgrad
