#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "proxvi/trace.hpp"

namespace proxvi {

/// Self-contained SVG line chart of one metric against cumulative score
/// calls: one polyline per run (i.e. per algo x seed x beta), colors keyed by
/// algorithm label with a legend, log-scale y axis when every plotted value
/// is positive. MetricMissing when a run carries no rows for the metric.
std::string render_convergence_svg(const std::vector<TraceRow>& rows,
                                   const std::string& metric);

/// Same, written to a file. IoError when the file cannot be written.
void render_convergence_svg(const std::vector<TraceRow>& rows, const std::string& metric,
                            const std::filesystem::path& path);

} // namespace proxvi
