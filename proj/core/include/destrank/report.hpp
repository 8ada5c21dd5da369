#pragma once

#include <optional>
#include <string>
#include <vector>

#include "destrank/evaluation.hpp"

namespace destrank::eval {

/// Evaluated run shown as one report row.
struct RunSummary {
  std::string label;  // e.g. "EQR" or "EQR (sparse-bm25)"
  std::vector<MetricReport> reports;

  const MetricReport& report(const std::string& metric_id) const;
};

/// Result of comparing one cell against the best baseline of its column.
struct CellComparison {
  std::string baseline_label;
  std::optional<SignificanceResult> test;  // empty on ZeroVariance
  std::string note;                        // why the test is missing
  bool improved_significantly = false;
};

struct ReportTable {
  std::vector<MetricSpec> metrics;
  std::vector<RunSummary> rows;
  bool has_baseline = false;
  /// [row][metric]
  std::vector<std::vector<CellComparison>> comparisons;
};

/// For every metric column the baseline run with the best mean is picked and
/// each row is paired-t-tested against it. A cell earns an asterisk when it
/// improves on that baseline with p < 0.01.
ReportTable build_report(std::vector<RunSummary> rows, const std::vector<RunSummary>& baselines,
                         const std::vector<MetricSpec>& metrics);

/// "0.513±0.068", "*" appended for significant improvements.
std::string format_cell(const MetricReport& report, bool asterisk);

std::string render_csv(const ReportTable& table);
std::string render_markdown(const ReportTable& table);

}  // namespace destrank::eval
