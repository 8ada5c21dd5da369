#include "destrank/evaluation.hpp"

#include <charconv>
#include <cstdio>

#include "destrank/errors.hpp"
#include "destrank/metrics.hpp"
#include "destrank/text.hpp"

namespace destrank::eval {

namespace {

int parse_int(std::string_view s, std::string_view what) {
  s = text::trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::Usage, "bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string MetricSpec::id() const {
  switch (kind) {
    case MetricKind::Recall: return "recall@" + std::to_string(k);
    case MetricKind::AveragePrecision: return "map@" + std::to_string(k);
    case MetricKind::RPrecision: return "r-precision";
  }
  return {};
}

std::string MetricSpec::label() const {
  switch (kind) {
    case MetricKind::Recall: return "Recall@" + std::to_string(k);
    case MetricKind::AveragePrecision: return "MAP@" + std::to_string(k);
    case MetricKind::RPrecision: return "R-Precision";
  }
  return {};
}

MetricSpec parse_metric(std::string_view name) {
  const auto n = text::to_lower_ascii(text::trim(name));
  if (n == "r-precision" || n == "rprecision" || n == "r-prec") return {MetricKind::RPrecision, 0};
  const auto at = n.find('@');
  if (at != std::string::npos) {
    const auto head = std::string_view(n).substr(0, at);
    const int k = parse_int(std::string_view(n).substr(at + 1), "metric cutoff");
    if (k < 1) throw Error(Errc::Usage, "metric cutoff must be >= 1");
    if (head == "recall") return {MetricKind::Recall, k};
    if (head == "map" || head == "ap") return {MetricKind::AveragePrecision, k};
  }
  throw Error(Errc::Usage, "unknown metric '" + std::string(name) + "'");
}

std::vector<MetricSpec> parse_metrics(std::string_view list) {
  std::vector<MetricSpec> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    auto item = text::trim(list.substr(start, comma - start));
    if (!item.empty()) out.push_back(parse_metric(item));
    start = comma + 1;
  }
  return out;
}

std::vector<MetricSpec> default_metrics() {
  return {{MetricKind::AveragePrecision, 30},
          {MetricKind::AveragePrecision, 50},
          {MetricKind::Recall, 30},
          {MetricKind::Recall, 50},
          {MetricKind::RPrecision, 0}};
}

double compute_metric(const MetricSpec& metric, std::span<const std::string> ranking,
                      const std::set<std::string>& relevant) {
  switch (metric.kind) {
    case MetricKind::Recall: return recall_at_k(ranking, relevant, metric.k);
    case MetricKind::AveragePrecision: return average_precision_at_k(ranking, relevant, metric.k);
    case MetricKind::RPrecision: return r_precision(ranking, relevant);
  }
  return 0.0;
}

std::vector<MetricReport> evaluate_run(const RunRankings& rankings, const Dataset& dataset,
                                       const std::vector<MetricSpec>& metrics) {
  std::vector<std::vector<std::string>> ids;
  ids.reserve(dataset.queries.size());
  for (const auto& q : dataset.queries) {
    auto it = rankings.find(q.qid);
    if (it == rankings.end()) throw Error(Errc::MissingRanking, q.qid);
    ids.push_back(it->second.ids());
  }

  std::vector<MetricReport> reports;
  for (const auto& metric : metrics) {
    MetricReport rep;
    rep.metric = metric.id();
    if (metric.kind != MetricKind::RPrecision) rep.k = metric.k;
    std::vector<double> values;
    values.reserve(dataset.queries.size());
    for (std::size_t i = 0; i < dataset.queries.size(); ++i) {
      const auto& q = dataset.queries[i];
      const double v = compute_metric(metric, ids[i], dataset.relevant_for(q.qid).relevant);
      rep.per_query[q.qid] = v;
      values.push_back(v);
    }
    if (values.size() >= 2) {
      rep.ci = mean_and_ci(values);
      rep.mean = rep.ci->mean;
    } else if (!values.empty()) {
      rep.mean = values.front();
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

SweepResult sweep(std::string_view parameter, std::span<const int> values, const SweepRunner& run,
                  const Dataset& dataset, const std::vector<MetricSpec>& metrics) {
  if (parameter != "top_n" && parameter != "k_subtopics") {
    throw Error(Errc::Usage, "unknown sweep parameter '" + std::string(parameter) + "'");
  }
  if (values.empty()) throw Error(Errc::Usage, "empty sweep range");
  SweepResult result;
  result.parameter = std::string(parameter);
  for (const auto& m : metrics) {
    result.metric_order.push_back(m.id());
    result.metrics[m.id()];
  }
  for (int v : values) {
    const auto reports = evaluate_run(run(v), dataset, metrics);
    result.values.push_back(v);
    for (const auto& rep : reports) result.metrics[rep.metric].push_back(rep.mean);
  }
  return result;
}

std::vector<int> parse_range(std::string_view spec) {
  spec = text::trim(spec);
  std::vector<int> out;
  if (auto colon = spec.find(':'); colon != std::string_view::npos) {
    const int lo = parse_int(spec.substr(0, colon), "range start");
    const int hi = parse_int(spec.substr(colon + 1), "range end");
    if (hi < lo) throw Error(Errc::Usage, "empty range '" + std::string(spec) + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto comma = spec.find(',', start);
    if (comma == std::string_view::npos) comma = spec.size();
    out.push_back(parse_int(spec.substr(start, comma - start), "range value"));
    start = comma + 1;
  }
  return out;
}

std::string to_csv(const SweepResult& result) {
  std::string out = result.parameter;
  for (const auto& id : result.metric_order) out += "," + parse_metric(id).label();
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    out += std::to_string(result.values[i]);
    for (const auto& id : result.metric_order) {
      std::snprintf(buf, sizeof buf, ",%.6f", result.metrics.at(id)[i]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace destrank::eval
