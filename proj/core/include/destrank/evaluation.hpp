#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "destrank/corpus.hpp"
#include "destrank/scoring.hpp"
#include "destrank/stats.hpp"

namespace destrank::eval {

enum class MetricKind { Recall, AveragePrecision, RPrecision };

struct MetricSpec {
  MetricKind kind = MetricKind::Recall;
  int k = 0;  // unused for R-Precision

  /// Canonical lowercase id: "recall@30", "map@50", "r-precision".
  std::string id() const;
  /// Column header: "Recall@30", "MAP@50", "R-Precision".
  std::string label() const;
  bool operator==(const MetricSpec&) const = default;
};

/// Parses "recall@30", "MAP@50", "r-precision" (case-insensitive).
MetricSpec parse_metric(std::string_view name);
std::vector<MetricSpec> parse_metrics(std::string_view comma_separated);
/// MAP@30, MAP@50, Recall@30, Recall@50, R-Precision.
std::vector<MetricSpec> default_metrics();

double compute_metric(const MetricSpec& metric, std::span<const std::string> ranking,
                      const std::set<std::string>& relevant);

struct MetricReport {
  std::string metric;  // MetricSpec::id()
  std::map<std::string, double> per_query;
  double mean = 0.0;
  /// Absent when fewer than two queries were evaluated.
  std::optional<MeanCi> ci;
  std::optional<int> k;

  double half_width() const noexcept { return ci ? ci->half_width() : 0.0; }
};

/// Rankings of one run keyed by qid.
using RunRankings = std::map<std::string, RankedList>;

/// One report per metric; means are reduced in dataset query order. Throws
/// Error{MissingRanking} when a dataset query has no ranking.
std::vector<MetricReport> evaluate_run(const RunRankings& rankings, const Dataset& dataset,
                                       const std::vector<MetricSpec>& metrics);

struct SweepResult {
  std::string parameter;  // "top_n" or "k_subtopics"
  std::vector<int> values;
  std::vector<std::string> metric_order;
  std::map<std::string, std::vector<double>> metrics;  // aligned with values
};

/// Produces the rankings for one parameter value.
using SweepRunner = std::function<RunRankings(int value)>;

/// Throws Error{Usage} for an unknown parameter or an empty range.
SweepResult sweep(std::string_view parameter, std::span<const int> values, const SweepRunner& run,
                  const Dataset& dataset, const std::vector<MetricSpec>& metrics);

/// "a:b" inclusive, or a single integer, or a comma list.
std::vector<int> parse_range(std::string_view spec);

/// Header "<parameter>,<metric labels...>", one row per value.
std::string to_csv(const SweepResult& result);

}  // namespace destrank::eval
