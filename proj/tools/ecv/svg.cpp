#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ecv {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
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

std::string decade_label(int e) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "1e%d", e);
  return buf;
}

}  // namespace

std::string loglog_svg(const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<Series>& series,
                       const std::string& empty_note) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!(s.x[k] > 0.0) || !(s.y[k] > 0.0) || !std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, std::log10(s.x[k]));
      x1 = std::max(x1, std::log10(s.x[k]));
      y0 = std::min(y0, std::log10(s.y[k]));
      y1 = std::max(y1, std::log10(s.y[k]));
    }

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
                    "\" height=\"" + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  if (!std::isfinite(x0)) {
    out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kTop + ph / 2) +
           "\" text-anchor=\"middle\">" + escape(empty_note) + "</text>\n</svg>\n";
    return out;
  }

  x0 = std::floor(x0);
  x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0);
  y1 = std::max(std::ceil(y1), y0 + 1);
  auto px = [&](double lx) { return kLeft + (lx - x0) / (x1 - x0) * pw; };
  auto py = [&](double ly) { return kTop + ph - (ly - y0) / (y1 - y0) * ph; };

  for (int e = static_cast<int>(x0); e <= static_cast<int>(x1); ++e) {
    out += "<line x1=\"" + num(px(e)) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(px(e)) +
           "\" y2=\"" + num(kTop + ph) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(px(e)) + "\" y=\"" + num(kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + decade_label(e) + "</text>\n";
  }
  const int ystep = std::max(1, static_cast<int>((y1 - y0) / 8));
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); e += ystep) {
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(e)) + "\" x2=\"" + num(kLeft + pw) +
           "\" y2=\"" + num(py(e)) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(e) + 4) +
           "\" text-anchor=\"end\">" + decade_label(e) + "</text>\n";
  }
  out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 15) +
         "\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
  out += "<text transform=\"translate(18," + num(kTop + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    std::string pts;
    std::string marks;
    for (std::size_t k = 0; k < series[s].x.size() && k < series[s].y.size(); ++k) {
      const double x = series[s].x[k], y = series[s].y[k];
      if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(y)) continue;
      const std::string cx = num(px(std::log10(x))), cy = num(py(std::log10(y)));
      pts += cx + "," + cy + " ";
      marks += "<circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    if (!pts.empty()) {
      pts.pop_back();
      out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\"/>\n";
    }
    out += marks;
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    out += "<line x1=\"" + num(kLeft + pw + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
           num(kLeft + pw + 32) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\"/>\n";
    out += "<text x=\"" + num(kLeft + pw + 38) + "\" y=\"" + num(ly) + "\">" +
           escape(series[s].name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ecv
