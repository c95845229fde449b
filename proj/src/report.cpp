#include "surplex/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "surplex/errors.hpp"
#include "surplex/io.hpp"

namespace surplex {
namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 180.0;  // legend column
constexpr double kMarginTop = 48.0;
constexpr double kMarginBottom = 56.0;

const char* const kPalette[] = {"#4878cf", "#d65f5f", "#59a14f", "#b07aa1",
                                "#e49444", "#76b7b2", "#edc948", "#9c755f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string esc(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Short numeric label for axis ticks.
std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct YScale {
  double lo = 0.0;
  double hi = 1.0;
  double map(double v, double plot_top, double plot_bottom) const {
    if (hi == lo) return (plot_top + plot_bottom) / 2.0;
    const double t = (v - lo) / (hi - lo);
    return plot_bottom - t * (plot_bottom - plot_top);
  }
};

YScale fit_scale(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (hi <= lo) {
    const double pad = std::max(std::abs(hi) * 0.1, 0.5);
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.08;
  return {lo - pad, hi + pad};
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << kMarginLeft << "\" y=\"28\" font-size=\"17\" "
      << "fill=\"#1a1a1a\" font-weight=\"bold\">" << esc(title)
      << "</text>\n";
}

void draw_axes(std::ostringstream& out, const YScale& scale,
               std::size_t steps, const std::string& y_label) {
  const double plot_left = kMarginLeft;
  const double plot_right = kWidth - kMarginRight;
  const double plot_top = kMarginTop;
  const double plot_bottom = kHeight - kMarginBottom;

  out << "<line x1=\"" << coord(plot_left) << "\" y1=\"" << coord(plot_bottom)
      << "\" x2=\"" << coord(plot_right) << "\" y2=\"" << coord(plot_bottom)
      << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << coord(plot_left) << "\" y1=\"" << coord(plot_top)
      << "\" x2=\"" << coord(plot_left) << "\" y2=\"" << coord(plot_bottom)
      << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double v = scale.lo + (scale.hi - scale.lo) * i / 4.0;
    const double y = scale.map(v, plot_top, plot_bottom);
    out << "<line x1=\"" << coord(plot_left) << "\" y1=\"" << coord(y)
        << "\" x2=\"" << coord(plot_right) << "\" y2=\"" << coord(y)
        << "\" stroke=\"#ddd\" stroke-width=\"0.6\"/>\n";
    out << "<text x=\"" << coord(plot_left - 8) << "\" y=\"" << coord(y + 4)
        << "\" font-size=\"11\" fill=\"#333\" text-anchor=\"end\">"
        << esc(tick_label(v)) << "</text>\n";
  }
  for (std::size_t s = 0; s < steps; ++s) {
    const double x =
        steps == 1 ? (plot_left + plot_right) / 2.0
                   : plot_left + (plot_right - plot_left) *
                                     static_cast<double>(s) /
                                     static_cast<double>(steps - 1);
    out << "<text x=\"" << coord(x) << "\" y=\"" << coord(plot_bottom + 18)
        << "\" font-size=\"11\" fill=\"#333\" text-anchor=\"middle\">" << s
        << "</text>\n";
  }
  out << "<text x=\"" << coord((plot_left + plot_right) / 2.0) << "\" y=\""
      << coord(kHeight - 16) << "\" font-size=\"12\" fill=\"#333\" "
      << "text-anchor=\"middle\">step</text>\n";
  out << "<text x=\"20\" y=\"" << coord((plot_top + plot_bottom) / 2.0)
      << "\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 20 " << coord((plot_top + plot_bottom) / 2.0)
      << ")\">" << esc(y_label) << "</text>\n";
}

void append_metadata(std::ostringstream& out, const nlohmann::json& data) {
  out << "<metadata id=\"chart-data\"><![CDATA[" << data.dump()
      << "]]></metadata>\n";
}

}  // namespace

std::string render_line_chart(const std::string& metric,
                              std::span<const ComparisonSeries> series) {
  if (series.empty()) throw Error("line chart needs at least one series");
  const std::size_t steps = series.front().per_step.size();
  for (const ComparisonSeries& s : series) {
    if (s.per_step.size() != steps) {
      throw Error("line chart series disagree on step count");
    }
  }

  double lo = series.front().per_step.front().mean;
  double hi = lo;
  for (const ComparisonSeries& s : series) {
    for (const MetricSample& sample : s.per_step) {
      lo = std::min(lo, sample.mean - sample.std_error);
      hi = std::max(hi, sample.mean + sample.std_error);
    }
  }
  const YScale scale = fit_scale(lo, hi);

  const double plot_left = kMarginLeft;
  const double plot_right = kWidth - kMarginRight;
  const double plot_top = kMarginTop;
  const double plot_bottom = kHeight - kMarginBottom;
  auto x_of = [&](std::size_t s) {
    return steps == 1 ? (plot_left + plot_right) / 2.0
                      : plot_left + (plot_right - plot_left) *
                                        static_cast<double>(s) /
                                        static_cast<double>(steps - 1);
  };

  std::ostringstream out;
  open_svg(out, metric + " by step");
  draw_axes(out, scale, steps, metric);

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    const ComparisonSeries& s = series[i];

    // Standard-error band: upper edge forward, lower edge back.
    std::ostringstream band;
    for (std::size_t step = 0; step < steps; ++step) {
      const MetricSample& m = s.per_step[step];
      band << (step == 0 ? "M" : "L") << coord(x_of(step)) << ","
           << coord(scale.map(m.mean + m.std_error, plot_top, plot_bottom))
           << " ";
    }
    for (std::size_t step = steps; step-- > 0;) {
      const MetricSample& m = s.per_step[step];
      band << "L" << coord(x_of(step)) << ","
           << coord(scale.map(m.mean - m.std_error, plot_top, plot_bottom))
           << " ";
    }
    out << "<path d=\"" << band.str() << "Z\" fill=\"" << color
        << "\" opacity=\"0.15\"/>\n";

    std::ostringstream line;
    for (std::size_t step = 0; step < steps; ++step) {
      const MetricSample& m = s.per_step[step];
      line << coord(x_of(step)) << ","
           << coord(scale.map(m.mean, plot_top, plot_bottom)) << " ";
    }
    out << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"2\"/>\n";
    for (std::size_t step = 0; step < steps; ++step) {
      const MetricSample& m = s.per_step[step];
      out << "<circle cx=\"" << coord(x_of(step)) << "\" cy=\""
          << coord(scale.map(m.mean, plot_top, plot_bottom))
          << "\" r=\"2.6\" fill=\"" << color << "\"/>\n";
    }

    const double legend_y = plot_top + 18.0 * static_cast<double>(i);
    out << "<rect x=\"" << coord(plot_right + 14) << "\" y=\""
        << coord(legend_y) << "\" width=\"12\" height=\"12\" fill=\"" << color
        << "\"/>\n";
    out << "<text x=\"" << coord(plot_right + 32) << "\" y=\""
        << coord(legend_y + 10) << "\" font-size=\"12\" fill=\"#1a1a1a\">"
        << esc(s.label) << "</text>\n";
  }

  nlohmann::json data;
  data["metric"] = metric;
  nlohmann::json series_json = nlohmann::json::array();
  for (const ComparisonSeries& s : series) {
    nlohmann::json entry;
    entry["label"] = s.label;
    nlohmann::json means = nlohmann::json::array();
    nlohmann::json errors = nlohmann::json::array();
    nlohmann::json values = nlohmann::json::array();
    for (const MetricSample& m : s.per_step) {
      means.push_back(m.mean);
      errors.push_back(m.std_error);
      values.push_back(m.values);
    }
    entry["mean"] = std::move(means);
    entry["std_error"] = std::move(errors);
    entry["values"] = std::move(values);  // values[step][repeat]
    series_json.push_back(std::move(entry));
  }
  data["series"] = std::move(series_json);
  append_metadata(out, data);

  out << "</svg>\n";
  return out.str();
}

std::string render_selection_bars(const RunRecord& record) {
  if (record.repeats.empty() || record.repeats.front().selections.empty()) {
    throw Error("run has no selection data to chart");
  }
  const RepeatRecord& shown = record.repeats.front();
  const std::size_t steps = shown.selections.size();

  // Stable segment order: every (source, origin) class seen anywhere.
  std::vector<std::pair<std::string, std::string>> classes;
  for (const RepeatRecord& rep : record.repeats) {
    for (const SelectionReport& report : rep.selections) {
      for (const auto& [key, count] : report.by_source_origin) {
        if (std::find(classes.begin(), classes.end(), key) == classes.end()) {
          classes.push_back(key);
        }
      }
    }
  }
  std::sort(classes.begin(), classes.end());

  std::size_t max_total = 1;
  for (const SelectionReport& report : shown.selections) {
    max_total = std::max(max_total, report.selected);
  }

  const double plot_left = kMarginLeft;
  const double plot_right = kWidth - kMarginRight;
  const double plot_top = kMarginTop;
  const double plot_bottom = kHeight - kMarginBottom;

  std::ostringstream out;
  open_svg(out, record.run_label + ": selected documents by provenance");
  const YScale scale{0.0, static_cast<double>(max_total)};

  for (int i = 0; i <= 4; ++i) {
    const double v = scale.lo + (scale.hi - scale.lo) * i / 4.0;
    const double y = scale.map(v, plot_top, plot_bottom);
    out << "<line x1=\"" << coord(plot_left) << "\" y1=\"" << coord(y)
        << "\" x2=\"" << coord(plot_right) << "\" y2=\"" << coord(y)
        << "\" stroke=\"#ddd\" stroke-width=\"0.6\"/>\n";
    out << "<text x=\"" << coord(plot_left - 8) << "\" y=\"" << coord(y + 4)
        << "\" font-size=\"11\" fill=\"#333\" text-anchor=\"end\">"
        << esc(tick_label(v)) << "</text>\n";
  }
  out << "<line x1=\"" << coord(plot_left) << "\" y1=\"" << coord(plot_bottom)
      << "\" x2=\"" << coord(plot_right) << "\" y2=\"" << coord(plot_bottom)
      << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  const double band = (plot_right - plot_left) / static_cast<double>(steps);
  const double bar_width = band * 0.62;
  for (std::size_t s = 0; s < steps; ++s) {
    const SelectionReport& report = shown.selections[s];
    const double x = plot_left + band * (static_cast<double>(s) + 0.5);
    double y_base = plot_bottom;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      auto it = report.by_source_origin.find(classes[c]);
      if (it == report.by_source_origin.end() || it->second == 0) continue;
      const double height =
          (plot_bottom - plot_top) * static_cast<double>(it->second) /
          static_cast<double>(max_total);
      out << "<rect x=\"" << coord(x - bar_width / 2.0) << "\" y=\""
          << coord(y_base - height) << "\" width=\"" << coord(bar_width)
          << "\" height=\"" << coord(height) << "\" fill=\""
          << kPalette[c % kPaletteSize] << "\"/>\n";
      y_base -= height;
    }
    out << "<text x=\"" << coord(x) << "\" y=\"" << coord(plot_bottom + 18)
        << "\" font-size=\"11\" fill=\"#333\" text-anchor=\"middle\">"
        << (s + 1) << "</text>\n";
  }
  out << "<text x=\"" << coord((plot_left + plot_right) / 2.0) << "\" y=\""
      << coord(kHeight - 16)
      << "\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\">step"
      << "</text>\n";

  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double legend_y = plot_top + 18.0 * static_cast<double>(c);
    out << "<rect x=\"" << coord(plot_right + 14) << "\" y=\""
        << coord(legend_y) << "\" width=\"12\" height=\"12\" fill=\""
        << kPalette[c % kPaletteSize] << "\"/>\n";
    out << "<text x=\"" << coord(plot_right + 32) << "\" y=\""
        << coord(legend_y + 10) << "\" font-size=\"12\" fill=\"#1a1a1a\">"
        << esc(classes[c].first + " / " + classes[c].second) << "</text>\n";
  }

  nlohmann::json data;
  data["run"] = record.run_label;
  data["shown_repeat"] = shown.repeat;
  nlohmann::json repeats = nlohmann::json::array();
  for (const RepeatRecord& rep : record.repeats) {
    nlohmann::json steps_json = nlohmann::json::array();
    for (std::size_t s = 0; s < rep.selections.size(); ++s) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& [key, count] : rep.selections[s].by_source_origin) {
        rows.push_back({{"source", key.first},
                        {"origin", key.second},
                        {"count", count}});
      }
      steps_json.push_back(
          {{"step", s + 1},
           {"total", rep.selections[s].selected},
           {"counts", std::move(rows)}});
    }
    repeats.push_back(
        {{"repeat", rep.repeat}, {"steps", std::move(steps_json)}});
  }
  data["repeats"] = std::move(repeats);
  append_metadata(out, data);

  out << "</svg>\n";
  return out.str();
}

std::vector<std::string> write_report(std::span<const RunRecord> records,
                                      const std::string& dir) {
  if (records.empty()) throw Error("no runs to report");
  ensure_directory(dir);
  std::vector<std::string> written;

  const ComparisonTable table = compare_runs(records);
  for (const auto& [metric, series] : table.metrics) {
    const std::string path = dir + "/chart_" + metric + ".svg";
    write_file(path, render_line_chart(metric, series));
    written.push_back(path);
  }

  std::vector<std::string> used_names;
  for (const RunRecord& record : records) {
    if (record.repeats.empty() || record.repeats.front().selections.empty()) {
      continue;
    }
    std::string name = record.run_label;
    std::size_t suffix = 2;
    while (std::find(used_names.begin(), used_names.end(), name) !=
           used_names.end()) {
      name = record.run_label + "_" + std::to_string(suffix++);
    }
    used_names.push_back(name);
    const std::string path = dir + "/selection_" + name + ".svg";
    write_file(path, render_selection_bars(record));
    written.push_back(path);
  }

  std::ostringstream summary;
  summary << "run,metric,step,mean,std_error\n";
  for (const auto& [metric, series] : table.metrics) {
    for (const ComparisonSeries& s : series) {
      for (std::size_t step = 0; step < s.per_step.size(); ++step) {
        summary << s.label << ',' << metric << ',' << step << ','
                << format_double(s.per_step[step].mean) << ','
                << format_double(s.per_step[step].std_error) << '\n';
      }
    }
  }
  const std::string summary_path = dir + "/summary.csv";
  write_file(summary_path, summary.str());
  written.push_back(summary_path);
  return written;
}

}  // namespace surplex
