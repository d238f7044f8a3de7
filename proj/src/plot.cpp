#include "gannoise/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace gannoise {

namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 620.0, kTop = 20.0, kBottom = 360.0;

std::optional<double> metric_value(const MetricRecord& r, const std::string& metric) {
  if (metric == "fd") return r.fd;
  if (metric == "jsd") return r.jsd;
  if (metric == "fid") return r.fid;
  if (metric == "is_mean") return r.is_mean;
  if (metric == "is_var") return r.is_var;
  throw FormatError("unknown metric \"" + metric +
                    "\"; available columns: fd, jsd, fid, is_mean, is_var");
}

const char* color_of(LossKind loss) {
  switch (loss) {
    case LossKind::gan_nonsat: return "#c0392b";
    case LossKind::wgan_gp: return "#2980b9";
    case LossKind::wgan_clip: return "#27ae60";
  }
  return "#000000";
}

// Fixed-precision coordinates keep the output byte-stable.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct SeriesPoint {
  std::size_t dim = 0;
  double mean = 0.0, lo = 0.0, hi = 0.0;
};

}  // namespace

std::string render_metric_svg(const std::vector<MetricRecord>& records,
                              const std::string& metric) {
  (void)metric_value(MetricRecord{}, metric);  // reject unknown names up front

  // The final recorded step of each run is the run's result.
  std::map<std::string, const MetricRecord*> final_rows;
  for (const MetricRecord& r : records) {
    auto [it, fresh] = final_rows.try_emplace(r.fingerprint, &r);
    if (!fresh && r.step >= it->second->step) it->second = &r;
  }

  std::map<LossKind, std::map<std::size_t, std::vector<double>>> grouped;
  for (const auto& [fp, row] : final_rows) {
    (void)fp;
    const std::optional<double> v = metric_value(*row, metric);
    if (v) grouped[row->loss][row->noise_dim].push_back(*v);
  }
  if (grouped.empty()) throw FormatError("no \"" + metric + "\" data in the results");

  std::map<LossKind, std::vector<SeriesPoint>> series;
  std::set<std::size_t> all_dims;
  double y_lo = 0.0, y_hi = 0.0;
  bool y_init = false;
  for (const auto& [loss, by_dim] : grouped) {
    for (const auto& [dim, values] : by_dim) {
      SeriesPoint p;
      p.dim = dim;
      p.lo = p.hi = values.front();
      double sum = 0.0;
      for (double v : values) {
        sum += v;
        p.lo = std::min(p.lo, v);
        p.hi = std::max(p.hi, v);
      }
      p.mean = sum / static_cast<double>(values.size());
      series[loss].push_back(p);
      all_dims.insert(dim);
      if (!y_init) {
        y_lo = p.lo;
        y_hi = p.hi;
        y_init = true;
      } else {
        y_lo = std::min(y_lo, p.lo);
        y_hi = std::max(y_hi, p.hi);
      }
    }
  }

  const std::size_t dim_min = *all_dims.begin();
  const std::size_t dim_max = *all_dims.rbegin();
  const bool log_x =
      static_cast<double>(dim_max) / static_cast<double>(dim_min) > 20.0;

  if (y_hi == y_lo) {
    const double pad = std::max(1.0, std::abs(y_hi)) * 0.1;
    y_lo -= pad;
    y_hi += pad;
  } else {
    const double pad = (y_hi - y_lo) * 0.05;
    y_lo -= pad;
    y_hi += pad;
  }

  const auto xpos = [&](std::size_t dim) {
    if (all_dims.size() == 1) return (kLeft + kRight) / 2.0;
    const double t = log_x ? (std::log10(static_cast<double>(dim)) -
                              std::log10(static_cast<double>(dim_min))) /
                                 (std::log10(static_cast<double>(dim_max)) -
                                  std::log10(static_cast<double>(dim_min)))
                           : (static_cast<double>(dim) - static_cast<double>(dim_min)) /
                                 (static_cast<double>(dim_max) - static_cast<double>(dim_min));
    return kLeft + t * (kRight - kLeft);
  };
  const auto ypos = [&](double v) { return kBottom - (v - y_lo) / (y_hi - y_lo) * (kBottom - kTop); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"#ffffff\"/>\n";

  // axes
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  // x ticks at every observed dimension
  for (std::size_t dim : all_dims) {
    const double x = xpos(dim);
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(kBottom + 5.0) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(kBottom + 20.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\" "
           "text-anchor=\"middle\">" +
           std::to_string(dim) + "</text>\n";
  }

  // y ticks: five even divisions
  for (int i = 0; i <= 4; ++i) {
    const double v = y_lo + (y_hi - y_lo) * static_cast<double>(i) / 4.0;
    const double y = ypos(v);
    svg += "<line x1=\"" + num(kLeft - 5.0) + "\" y1=\"" + num(y) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(y) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + num(kLeft - 9.0) + "\" y=\"" + num(y + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\" "
           "text-anchor=\"end\">" +
           tick_label(v) + "</text>\n";
  }

  // axis labels
  svg += "<text x=\"" + num((kLeft + kRight) / 2.0) + "\" y=\"" + num(kHeight - 12.0) +
         "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#333333\" "
         "text-anchor=\"middle\">noise dimension" +
         std::string(log_x ? " (log scale)" : "") + "</text>\n";
  svg += "<text x=\"16\" y=\"" + num((kTop + kBottom) / 2.0) +
         "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#333333\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num((kTop + kBottom) / 2.0) + ")\">" + metric + "</text>\n";

  // one band + line + markers per loss family
  for (auto& [loss, points] : series) {
    std::sort(points.begin(), points.end(),
              [](const SeriesPoint& a, const SeriesPoint& b) { return a.dim < b.dim; });
    const char* color = color_of(loss);

    if (points.size() >= 2) {
      std::string band = "M";
      for (const SeriesPoint& p : points)
        band += " " + num(xpos(p.dim)) + " " + num(ypos(p.hi));
      for (auto it = points.rbegin(); it != points.rend(); ++it)
        band += " L " + num(xpos(it->dim)) + " " + num(ypos(it->lo));
      band += " Z";
      svg += "<path d=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.15\" "
             "stroke=\"none\"/>\n";

      std::string line;
      for (const SeriesPoint& p : points) {
        if (!line.empty()) line += " ";
        line += num(xpos(p.dim)) + "," + num(ypos(p.mean));
      }
      svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
    }
    for (const SeriesPoint& p : points)
      svg += "<circle cx=\"" + num(xpos(p.dim)) + "\" cy=\"" + num(ypos(p.mean)) +
             "\" r=\"3\" fill=\"" + std::string(color) + "\"/>\n";
  }

  // legend
  double legend_y = kTop + 8.0;
  for (const auto& [loss, points] : series) {
    (void)points;
    const double x = kRight - 130.0;
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(legend_y - 9.0) +
           "\" width=\"18\" height=\"6\" fill=\"" + color_of(loss) + "\"/>\n";
    svg += "<text x=\"" + num(x + 24.0) + "\" y=\"" + num(legend_y) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">" + loss_name(loss) +
           "</text>\n";
    legend_y += 18.0;
  }

  svg += "</svg>\n";
  return svg;
}

void emit_plot_svg(const std::filesystem::path& results_csv, const std::string& metric,
                   const std::filesystem::path& out_svg) {
  const std::vector<MetricRecord> records = load_csv(results_csv);
  const std::string svg = render_metric_svg(records, metric);
  std::ofstream out(out_svg, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + out_svg.string());
  out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
  if (!out) throw FormatError("short write: " + out_svg.string());
}

}  // namespace gannoise
