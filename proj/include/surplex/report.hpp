#pragma once

#include <span>
#include <string>
#include <vector>

#include "surplex/simulator.hpp"

namespace surplex {

// Line chart of one metric across steps: mean line per run with a shaded
// standard-error band. The SVG carries a <metadata> JSON block holding the
// exact per-repeat values, so charts are machine-checkable against
// metrics.csv.
std::string render_line_chart(const std::string& metric,
                              std::span<const ComparisonSeries> series);

// Stacked per-step provenance bars for one run (Fig-9-style composition):
// one segment per (source_label, origin) class. The drawing shows the first
// repeat; the <metadata> block carries every repeat's exact counts.
std::string render_selection_bars(const RunRecord& record);

// Writes chart_<metric>.svg per metric, selection_<label>.svg per run with
// selection data, and summary.csv (run,metric,step,mean,std_error) into
// dir. Returns the paths written.
std::vector<std::string> write_report(std::span<const RunRecord> records,
                                      const std::string& dir);

}  // namespace surplex
