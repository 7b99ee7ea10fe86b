#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "metashift/common/error.hpp"

namespace metashift::cli {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 190, kTop = 40, kBottom = 55;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Axis {
  double lo, hi;
  bool log;
  double pixel_lo, pixel_hi;
  double map(double v) const {
    const double a = log ? std::log10(lo) : lo, b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

std::vector<double> ticks(double lo, double hi, bool log, const std::vector<double>& data_x) {
  if (log) {
    std::vector<double> t = data_x;
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 ? 0.0 : v);
  return t;
}

}  // namespace

std::string render_svg(const LinePlot& plot, const std::string& comment) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
  std::vector<double> all_x;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw ValidationError("plot series '" + s.label + "': x and y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      all_x.push_back(s.x[i]);
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min({y_lo, s.y[i], s.lo.empty() ? s.y[i] : s.lo[i]});
      y_hi = std::max({y_hi, s.y[i], s.hi.empty() ? s.y[i] : s.hi[i]});
    }
  }
  if (all_x.empty()) throw ValidationError("plot '" + plot.title + "' has no data");
  if (plot.log_x && x_lo <= 0) throw ValidationError("plot '" + plot.title + "': log axis needs positive x");
  if (x_hi == x_lo) {
    x_lo = plot.log_x ? x_lo / 2 : x_lo - 1;
    x_hi = plot.log_x ? x_hi * 2 : x_hi + 1;
  }
  const double pad = std::max(1e-3, 0.05 * (y_hi - y_lo));
  y_lo -= pad;
  y_hi += pad;
  const Axis ax{x_lo, x_hi, plot.log_x, kLeft, kWidth - kRight};
  const Axis ay{y_lo, y_hi, false, kHeight - kBottom, kTop};

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<!-- " + escape(comment) + " -->\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" viewBox=\"0 0 720 440\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt("%.1f", (kLeft + kWidth - kRight) / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       escape(plot.title) + "</text>\n";
  // axes and ticks
  o += "<g stroke=\"#444\" fill=\"none\"><rect x=\"" + fmt("%.1f", kLeft) + "\" y=\"" + fmt("%.1f", kTop) + "\" width=\"" +
       fmt("%.1f", kWidth - kRight - kLeft) + "\" height=\"" + fmt("%.1f", kHeight - kBottom - kTop) + "\"/></g>\n";
  for (double t : ticks(x_lo, x_hi, plot.log_x, all_x)) {
    const double px = ax.map(t);
    o += "<line x1=\"" + fmt("%.1f", px) + "\" y1=\"" + fmt("%.1f", kHeight - kBottom) + "\" x2=\"" + fmt("%.1f", px) +
         "\" y2=\"" + fmt("%.1f", kHeight - kBottom + 5) + "\" stroke=\"#444\"/>\n";
    o += "<text x=\"" + fmt("%.1f", px) + "\" y=\"" + fmt("%.1f", kHeight - kBottom + 18) + "\" text-anchor=\"middle\">" +
         fmt("%g", t) + "</text>\n";
  }
  for (double t : ticks(y_lo, y_hi, false, {})) {
    const double py = ay.map(t);
    o += "<line x1=\"" + fmt("%.1f", kLeft - 5) + "\" y1=\"" + fmt("%.1f", py) + "\" x2=\"" + fmt("%.1f", kWidth - kRight) +
         "\" y2=\"" + fmt("%.1f", py) + "\" stroke=\"#ddd\"/>\n";
    o += "<text x=\"" + fmt("%.1f", kLeft - 8) + "\" y=\"" + fmt("%.1f", py + 4) + "\" text-anchor=\"end\">" + fmt("%g", t) +
         "</text>\n";
  }
  o += "<text x=\"" + fmt("%.1f", (kLeft + kWidth - kRight) / 2) + "\" y=\"" + fmt("%.1f", kHeight - 12) +
       "\" text-anchor=\"middle\">" + escape(plot.x_label) + "</text>\n";
  o += "<text transform=\"translate(18," + fmt("%.1f", (kTop + kHeight - kBottom) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(plot.y_label) + "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    if (!s.lo.empty()) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) pts += fmt("%.1f", ax.map(s.x[i])) + "," + fmt("%.1f", ay.map(s.hi[i])) + " ";
      for (std::size_t i = s.x.size(); i-- > 0;) pts += fmt("%.1f", ax.map(s.x[i])) + "," + fmt("%.1f", ay.map(s.lo[i])) + " ";
      o += "<polygon points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts += fmt("%.1f", ax.map(s.x[i])) + "," + fmt("%.1f", ay.map(s.y[i])) + " ";
    o += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      o += "<circle cx=\"" + fmt("%.1f", ax.map(s.x[i])) + "\" cy=\"" + fmt("%.1f", ay.map(s.y[i])) + "\" r=\"2.5\" fill=\"" +
           color + "\"/>\n";
    const double ly = kTop + 14 + 20.0 * static_cast<double>(k);
    o += "<line x1=\"" + fmt("%.1f", kWidth - kRight + 12) + "\" y1=\"" + fmt("%.1f", ly - 4) + "\" x2=\"" +
         fmt("%.1f", kWidth - kRight + 32) + "\" y2=\"" + fmt("%.1f", ly - 4) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fmt("%.1f", kWidth - kRight + 38) + "\" y=\"" + fmt("%.1f", ly) + "\">" + escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace metashift::cli
