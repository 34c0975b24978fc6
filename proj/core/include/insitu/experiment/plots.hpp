#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "insitu/rl/trainer.hpp"

namespace insitu::experiment {

struct Series {
  std::string label;
  std::vector<rl::RoundRecord> records;
};

/// Parses a metrics.csv body. Bad headers, wrong column counts and
/// unparsable numbers throw FormatError naming `source` and the line.
Series parse_metrics_csv(std::string_view text, std::string label,
                         std::string_view source = "metrics.csv");

/// Label is the run directory name (e.g. "ppo-seed0"), or the file stem when
/// the file sits elsewhere.
Series read_metrics_csv(const std::filesystem::path& path);

enum class XAxis { kMeasurements, kSeconds };

/// Columns that get a chart.
std::vector<std::string> plotted_columns();

/// One line chart of `column` against the chosen x axis. NaN points are
/// skipped; output depends only on the input values.
std::string render_svg(const std::vector<Series>& series, const std::string& column, XAxis x);

/// Reads every CSV and writes <column>_vs_measurements.svg and
/// <column>_vs_seconds.svg into `out_dir`. Returns the files written.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& csv_paths,
                                              const std::filesystem::path& out_dir);

}  // namespace insitu::experiment
