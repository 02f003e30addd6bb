#pragma once

#include <string>
#include <vector>

namespace epinet {

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Minimal deterministic line plot (fixed size, fixed palette, 5 ticks per
/// axis), enough for trajectory and comparison figures without a plotting
/// dependency.
std::string render_line_plot(const std::string& title,
                             const std::vector<SvgSeries>& series,
                             const std::string& x_label,
                             const std::string& y_label);

}  // namespace epinet
