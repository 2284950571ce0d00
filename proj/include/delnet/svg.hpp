#pragma once

// Static SVG line plots, emitted directly so the toolchain stays
// single-language. One file can hold several panels side by side; each panel
// draws its series as polylines with an optional translucent error band and
// a log-scale y axis.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace delnet {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // half-width around y (standard error); may be empty
  bool dashed = false;
};

struct PlotPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool log_y = true;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '&') {
      out += "&amp;";
    } else if (c == '<') {
      out += "&lt;";
    } else if (c == '>') {
      out += "&gt;";
    } else {
      out += c;
    }
  }
  return out;
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace detail

inline void write_svg(std::ostream& os, const std::vector<PlotPanel>& panels) {
  static const char* kPalette[] = {"#2563eb", "#dc2626", "#16a34a",
                                   "#9333ea", "#ea580c", "#0891b2"};
  constexpr int kColors = 6;
  const double panel_w = 460.0, panel_h = 360.0;
  const double ml = 64.0, mr = 16.0, mt = 36.0, mb = 48.0;
  const double width = panel_w * static_cast<double>(panels.size());

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << panel_h << "\" viewBox=\"0 0 " << width << " "
     << panel_h << "\">\n"
     << "<rect width=\"" << width << "\" height=\"" << panel_h
     << "\" fill=\"#ffffff\"/>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const PlotPanel& panel = panels[pi];
    const double x0 = panel_w * static_cast<double>(pi) + ml;
    const double x1 = panel_w * static_cast<double>(pi + 1) - mr;
    const double y0 = panel_h - mb;  // bottom
    const double y1 = mt;            // top

    // Data ranges. On a log axis, values at or below zero are floored to a
    // tenth of the smallest positive value so flat-zero tails stay visible.
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double pos_min = std::numeric_limits<double>::infinity();
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const PlotSeries& s : panel.series) {
      for (double v : s.x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
      }
      for (std::size_t k = 0; k < s.y.size(); ++k) {
        const double hw = k < s.band.size() ? s.band[k] : 0.0;
        ymin = std::min(ymin, s.y[k] - hw);
        ymax = std::max(ymax, s.y[k] + hw);
        if (s.y[k] - hw > 0.0) pos_min = std::min(pos_min, s.y[k] - hw);
        if (s.y[k] > 0.0) pos_min = std::min(pos_min, s.y[k]);
      }
    }
    if (!std::isfinite(xmin)) {
      xmin = 0.0;
      xmax = 1.0;
    }
    if (xmax <= xmin) xmax = xmin + 1.0;

    double lmin, lmax;
    if (panel.log_y) {
      if (!std::isfinite(pos_min)) pos_min = 1e-12;
      const double floor_v = pos_min / 10.0;
      lmin = std::log10(floor_v);
      lmax = std::isfinite(ymax) && ymax > 0.0 ? std::log10(ymax) : lmin + 1.0;
      if (lmax <= lmin) lmax = lmin + 1.0;
    } else {
      if (!std::isfinite(ymin)) {
        ymin = 0.0;
        ymax = 1.0;
      }
      if (ymax <= ymin) ymax = ymin + 1.0;
      lmin = ymin;
      lmax = ymax;
    }

    auto sx = [&](double v) {
      return x0 + (v - xmin) / (xmax - xmin) * (x1 - x0);
    };
    auto sy = [&](double v) {
      double t;
      if (panel.log_y) {
        const double fl = std::pow(10.0, lmin);
        t = (std::log10(std::max(v, fl)) - lmin) / (lmax - lmin);
      } else {
        t = (v - lmin) / (lmax - lmin);
      }
      return y0 + t * (y1 - y0);
    };

    // Frame and title.
    os << "<line x1=\"" << detail::svg_num(x0) << "\" y1=\""
       << detail::svg_num(y0) << "\" x2=\"" << detail::svg_num(x1)
       << "\" y2=\"" << detail::svg_num(y0)
       << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
       << "<line x1=\"" << detail::svg_num(x0) << "\" y1=\""
       << detail::svg_num(y0) << "\" x2=\"" << detail::svg_num(x0)
       << "\" y2=\"" << detail::svg_num(y1)
       << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
       << "<text x=\"" << detail::svg_num((x0 + x1) / 2.0) << "\" y=\""
       << detail::svg_num(mt - 14.0)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"14\">"
       << detail::svg_escape(panel.title) << "</text>\n";

    // X ticks: five evenly spaced positions.
    for (int k = 0; k < 5; ++k) {
      const double v = xmin + (xmax - xmin) * k / 4.0;
      const double px = sx(v);
      os << "<line x1=\"" << detail::svg_num(px) << "\" y1=\""
         << detail::svg_num(y0) << "\" x2=\"" << detail::svg_num(px)
         << "\" y2=\"" << detail::svg_num(y0 + 4.0)
         << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
         << "<text x=\"" << detail::svg_num(px) << "\" y=\""
         << detail::svg_num(y0 + 18.0)
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"11\">"
         << detail::tick_label(v) << "</text>\n";
    }
    os << "<text x=\"" << detail::svg_num((x0 + x1) / 2.0) << "\" y=\""
       << detail::svg_num(y0 + 36.0)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">"
       << detail::svg_escape(panel.x_label) << "</text>\n";

    // Y ticks: decades on a log axis, five linear ticks otherwise.
    if (panel.log_y) {
      const int k_lo = static_cast<int>(std::ceil(lmin - 1e-9));
      const int k_hi = static_cast<int>(std::floor(lmax + 1e-9));
      const int span = std::max(1, k_hi - k_lo);
      const int step = (span + 7) / 8;
      for (int k = k_lo; k <= k_hi; k += std::max(1, step)) {
        const double py = sy(std::pow(10.0, k));
        os << "<line x1=\"" << detail::svg_num(x0 - 4.0) << "\" y1=\""
           << detail::svg_num(py) << "\" x2=\"" << detail::svg_num(x0)
           << "\" y2=\"" << detail::svg_num(py)
           << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
           << "<text x=\"" << detail::svg_num(x0 - 7.0) << "\" y=\""
           << detail::svg_num(py + 4.0)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"11\">"
           << detail::tick_label(std::pow(10.0, k)) << "</text>\n";
      }
    } else {
      for (int k = 0; k < 5; ++k) {
        const double v = lmin + (lmax - lmin) * k / 4.0;
        const double py = sy(v);
        os << "<line x1=\"" << detail::svg_num(x0 - 4.0) << "\" y1=\""
           << detail::svg_num(py) << "\" x2=\"" << detail::svg_num(x0)
           << "\" y2=\"" << detail::svg_num(py)
           << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n"
           << "<text x=\"" << detail::svg_num(x0 - 7.0) << "\" y=\""
           << detail::svg_num(py + 4.0)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"11\">"
           << detail::tick_label(v) << "</text>\n";
      }
    }
    os << "<text x=\""
       << detail::svg_num(panel_w * static_cast<double>(pi) + 16.0)
       << "\" y=\"" << detail::svg_num((y0 + y1) / 2.0)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\" transform=\"rotate(-90 "
       << detail::svg_num(panel_w * static_cast<double>(pi) + 16.0) << " "
       << detail::svg_num((y0 + y1) / 2.0) << ")\">"
       << detail::svg_escape(panel.y_label) << "</text>\n";

    // Error bands first so lines stay on top.
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const PlotSeries& s = panel.series[si];
      if (s.band.empty() || s.x.empty()) continue;
      const char* color = kPalette[si % kColors];
      os << "<polygon fill=\"" << color
         << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        os << detail::svg_num(sx(s.x[k])) << ','
           << detail::svg_num(sy(s.y[k] + s.band[k])) << ' ';
      }
      for (std::size_t k = s.x.size(); k-- > 0;) {
        os << detail::svg_num(sx(s.x[k])) << ','
           << detail::svg_num(sy(s.y[k] - s.band[k]));
        if (k != 0) os << ' ';
      }
      os << "\"/>\n";
    }

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const PlotSeries& s = panel.series[si];
      if (s.x.empty()) continue;
      const char* color = kPalette[si % kColors];
      os << "<polyline fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.6\"";
      if (s.dashed) os << " stroke-dasharray=\"6 4\"";
      os << " points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (k != 0) os << ' ';
        os << detail::svg_num(sx(s.x[k])) << ',' << detail::svg_num(sy(s.y[k]));
      }
      os << "\"/>\n";
    }

    // Legend, top right inside the frame.
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const PlotSeries& s = panel.series[si];
      const char* color = kPalette[si % kColors];
      const double ly = y1 + 14.0 + 16.0 * static_cast<double>(si);
      os << "<line x1=\"" << detail::svg_num(x1 - 150.0) << "\" y1=\""
         << detail::svg_num(ly - 4.0) << "\" x2=\""
         << detail::svg_num(x1 - 126.0) << "\" y2=\""
         << detail::svg_num(ly - 4.0) << "\" stroke=\"" << color
         << "\" stroke-width=\"1.6\"";
      if (s.dashed) os << " stroke-dasharray=\"6 4\"";
      os << "/>\n<text class=\"legend\" x=\"" << detail::svg_num(x1 - 120.0)
         << "\" y=\"" << detail::svg_num(ly)
         << "\" font-family=\"sans-serif\" font-size=\"11\">"
         << detail::svg_escape(s.label) << "</text>\n";
    }
  }
  os << "</svg>\n";
}

inline std::string svg_text(const std::vector<PlotPanel>& panels) {
  std::ostringstream os;
  write_svg(os, panels);
  return os.str();
}

}  // namespace delnet
