#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gannoise/config.hpp"

namespace gannoise {

/// Renders one metric against noise dimension as a standalone SVG document:
/// the final-step row of every run contributes a point, one polyline per
/// loss family connects the per-dimension means over seeds, and a shaded
/// band spans the min-max envelope. The x-axis switches to log scale when
/// max(dim)/min(dim) > 20. A series with a single dimension renders a
/// marker instead of a polyline. Output bytes are a pure function of the
/// records and metric name.
///
/// Valid metric names: fd, jsd, fid, is_mean, is_var. Anything else throws
/// FormatError listing them; a metric with no data at all throws too.
std::string render_metric_svg(const std::vector<MetricRecord>& records, const std::string& metric);

/// load_csv + render + write.
void emit_plot_svg(const std::filesystem::path& results_csv, const std::string& metric,
                   const std::filesystem::path& out_svg);

}  // namespace gannoise
