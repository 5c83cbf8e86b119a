#pragma once

// Minimal static log-log line plots.

#include <string>
#include <vector>

namespace ecv {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Points with a nonpositive coordinate are dropped. With no drawable
/// points the plot carries `empty_note` instead.
std::string loglog_svg(const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<Series>& series,
                       const std::string& empty_note = "no data");

}  // namespace ecv
