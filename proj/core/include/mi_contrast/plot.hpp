#pragma once

#include <filesystem>

#include "mi_contrast/harness.hpp"

namespace mic {

// Renders a trace as a static SVG: the true-MI step function, the raw
// per-step estimate, and a window-50 moving average of the estimate.
// Hand-emitted polylines, no plotting dependencies; non-finite estimates
// (exploded runs) appear as gaps. Byte-deterministic in the trace.
void render_trace_svg(const EstimateTrace& trace,
                      const std::filesystem::path& out_svg,
                      int moving_average_window = 50);

}  // namespace mic
