#include "mi_contrast/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "mi_contrast/io.hpp"
#include "mi_contrast/numeric.hpp"

namespace mic {

namespace {

constexpr double kWidth = 960.0, kHeight = 540.0;
constexpr double kLeft = 64.0, kRight = 16.0, kTop = 16.0, kBottom = 40.0;

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// One <polyline> per finite run of points; NaNs break the line.
void append_series(std::string& svg, const std::vector<double>& ys,
                   double y_lo, double y_hi, std::size_t steps,
                   const char* color, double width) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double x_scale = steps > 1 ? plot_w / double(steps - 1) : 0.0;
  const double y_span = y_hi > y_lo ? y_hi - y_lo : 1.0;

  std::string points;
  auto flush = [&] {
    if (!points.empty()) {
      svg += "  <polyline fill=\"none\" stroke=\"";
      svg += color;
      svg += "\" stroke-width=\"" + fmt(width) + "\" points=\"" + points +
             "\"/>\n";
      points.clear();
    }
  };
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (!std::isfinite(ys[i])) {
      flush();
      continue;
    }
    const double px = kLeft + double(i) * x_scale;
    const double py = kTop + plot_h * (1.0 - (ys[i] - y_lo) / y_span);
    if (!points.empty()) points += ' ';
    points += fmt(px) + "," + fmt(py);
  }
  flush();
}

}  // namespace

void render_trace_svg(const EstimateTrace& trace,
                      const std::filesystem::path& out_svg,
                      int moving_average_window) {
  if (trace.rows.empty()) throw std::invalid_argument("empty trace");
  if (moving_average_window < 1)
    throw std::invalid_argument("window must be >= 1");

  const std::size_t steps = trace.rows.size();
  std::vector<double> truth(steps), estimate(steps), smoothed(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    truth[i] = trace.rows[i].true_mi;
    estimate[i] = trace.rows[i].mi_estimate;
  }
  // Trailing moving average over the window; any NaN inside poisons the
  // window, so explosions stay visible as gaps.
  const std::size_t w = static_cast<std::size_t>(moving_average_window);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t lo = i + 1 >= w ? i + 1 - w : 0;
    CompensatedSum sum;
    for (std::size_t k = lo; k <= i; ++k) sum.add(estimate[k]);
    smoothed[i] = sum.value() / double(i - lo + 1);
  }

  double y_lo = 0.0, y_hi = 1.0;
  bool seen = false;
  auto widen = [&](const std::vector<double>& ys) {
    for (double y : ys)
      if (std::isfinite(y)) {
        if (!seen) {
          y_lo = y_hi = y;
          seen = true;
        } else {
          y_lo = std::min(y_lo, y);
          y_hi = std::max(y_hi, y);
        }
      }
  };
  widen(truth);
  widen(estimate);
  widen(smoothed);
  const double pad = (y_hi - y_lo) * 0.05 + 1e-9;
  y_lo -= pad;
  y_hi += pad;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt(kWidth, "%.0f") + "\" height=\"" + fmt(kHeight, "%.0f") +
         "\" viewBox=\"0 0 " + fmt(kWidth, "%.0f") + " " +
         fmt(kHeight, "%.0f") + "\">\n";
  svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes.
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double yb = kHeight - kBottom, yt = kTop;
  svg += "  <line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(yb) + "\" x2=\"" +
         fmt(x1) + "\" y2=\"" + fmt(yb) + "\" stroke=\"black\"/>\n";
  svg += "  <line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(yb) + "\" x2=\"" +
         fmt(x0) + "\" y2=\"" + fmt(yt) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double frac = t / 4.0;
    const double yv = y_lo + frac * (y_hi - y_lo);
    const double py = yb - frac * (yb - yt);
    svg += "  <text x=\"" + fmt(x0 - 8.0) + "\" y=\"" + fmt(py + 4.0) +
           "\" font-size=\"12\" text-anchor=\"end\">" + fmt(yv, "%.4g") +
           "</text>\n";
    const double sv = frac * double(steps - 1);
    const double px = x0 + frac * (x1 - x0);
    svg += "  <text x=\"" + fmt(px) + "\" y=\"" + fmt(yb + 20.0) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + fmt(sv, "%.0f") +
           "</text>\n";
  }
  svg += "  <text x=\"" + fmt((x0 + x1) / 2.0) + "\" y=\"" +
         fmt(kHeight - 6.0) +
         "\" font-size=\"12\" text-anchor=\"middle\">step</text>\n";

  append_series(svg, estimate, y_lo, y_hi, steps, "#9ecae1", 1.0);
  append_series(svg, smoothed, y_lo, y_hi, steps, "#2171b5", 1.5);
  append_series(svg, truth, y_lo, y_hi, steps, "#d62728", 1.5);

  svg += "  <text x=\"" + fmt(x1 - 8.0) + "\" y=\"" + fmt(yt + 14.0) +
         "\" font-size=\"12\" text-anchor=\"end\" fill=\"#d62728\">true "
         "MI</text>\n";
  svg += "  <text x=\"" + fmt(x1 - 8.0) + "\" y=\"" + fmt(yt + 30.0) +
         "\" font-size=\"12\" text-anchor=\"end\" fill=\"#2171b5\">estimate "
         "(window-" + std::to_string(moving_average_window) +
         " mean)</text>\n";
  svg += "</svg>\n";
  write_file_atomic(out_svg, svg);
}

}  // namespace mic
