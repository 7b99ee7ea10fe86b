#pragma once

#include <string>
#include <vector>

namespace metashift::cli {

/// A line with an optional band (lo/hi empty = no band).
struct Series {
  std::string label;
  std::vector<double> x, y, lo, hi;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<Series> series;
};

/// Static SVG line chart; `comment` goes into an XML comment at the top.
std::string render_svg(const LinePlot& plot, const std::string& comment);

}  // namespace metashift::cli
