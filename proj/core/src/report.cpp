#include "destrank/report.hpp"

#include <cstdio>

#include "destrank/errors.hpp"

namespace destrank::eval {

const MetricReport& RunSummary::report(const std::string& metric_id) const {
  for (const auto& r : reports) {
    if (r.metric == metric_id) return r;
  }
  throw Error(Errc::Usage, "run '" + label + "' has no metric " + metric_id);
}

ReportTable build_report(std::vector<RunSummary> rows, const std::vector<RunSummary>& baselines,
                         const std::vector<MetricSpec>& metrics) {
  ReportTable table;
  table.metrics = metrics;
  table.rows = std::move(rows);
  table.has_baseline = !baselines.empty();
  if (!table.has_baseline) return table;

  table.comparisons.assign(table.rows.size(), std::vector<CellComparison>(metrics.size()));
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    const auto id = metrics[m].id();
    const RunSummary* best = &baselines.front();
    for (const auto& b : baselines) {
      if (b.report(id).mean > best->report(id).mean) best = &b;
    }
    const auto& base = best->report(id);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      auto& cell = table.comparisons[r][m];
      cell.baseline_label = best->label;
      const auto& cand = table.rows[r].report(id);
      try {
        cell.test = paired_t_test(cand.per_query, base.per_query);
        cell.improved_significantly = cell.test->significant_at_01 && cand.mean > base.mean;
      } catch (const Error& e) {
        if (e.code() != Errc::ZeroVariance && e.code() != Errc::TooFewValues) throw;
        cell.note = std::string(errc_name(e.code()));
      }
    }
  }
  return table;
}

std::string format_cell(const MetricReport& report, bool asterisk) {
  char buf[64];
  if (report.ci) {
    std::snprintf(buf, sizeof buf, "%.3f\xC2\xB1%.3f", report.mean, report.half_width());
  } else {
    std::snprintf(buf, sizeof buf, "%.3f", report.mean);
  }
  std::string out = buf;
  if (asterisk) out += "*";
  return out;
}

namespace {

std::string format_p(const CellComparison& c) {
  if (!c.test) return c.note;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", c.test->p_value);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool starred(const ReportTable& t, std::size_t r, std::size_t m) {
  return t.has_baseline && t.comparisons[r][m].improved_significantly;
}

}  // namespace

std::string render_csv(const ReportTable& table) {
  std::string out = "method";
  for (const auto& m : table.metrics) out += "," + csv_field(m.label());
  if (table.has_baseline) {
    for (const auto& m : table.metrics) out += "," + csv_field("p(" + m.label() + ")");
  }
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    out += csv_field(row.label);
    for (std::size_t m = 0; m < table.metrics.size(); ++m) {
      out += "," + format_cell(row.report(table.metrics[m].id()), starred(table, r, m));
    }
    if (table.has_baseline) {
      for (std::size_t m = 0; m < table.metrics.size(); ++m) {
        out += "," + csv_field(format_p(table.comparisons[r][m]));
      }
    }
    out += "\n";
  }
  return out;
}

std::string render_markdown(const ReportTable& table) {
  std::string out = "| QR Method |";
  std::string rule = "|---|";
  for (const auto& m : table.metrics) {
    out += " " + m.label() + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += "| " + table.rows[r].label + " |";
    for (std::size_t m = 0; m < table.metrics.size(); ++m) {
      out += " " + format_cell(table.rows[r].report(table.metrics[m].id()), starred(table, r, m)) + " |";
    }
    out += "\n";
  }
  out += "\nValues are means over queries with 95% confidence half-widths.\n";
  if (table.has_baseline) {
    out += "\n* marks a significant improvement over the best baseline of the column "
           "(two-sided paired t-test, p < 0.01).\n\n";
    out += "| QR Method | Metric | Baseline | t | df | p |\n|---|---|---|---|---|---|\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      for (std::size_t m = 0; m < table.metrics.size(); ++m) {
        const auto& c = table.comparisons[r][m];
        out += "| " + table.rows[r].label + " | " + table.metrics[m].label() + " | " + c.baseline_label + " | ";
        if (c.test) {
          char buf[96];
          std::snprintf(buf, sizeof buf, "%.4f | %d | %.4g |", c.test->t_statistic,
                        c.test->degrees_of_freedom, c.test->p_value);
          out += buf;
        } else {
          out += "- | - | " + c.note + " |";
        }
        out += "\n";
      }
    }
  }
  return out;
}

}  // namespace destrank::eval
