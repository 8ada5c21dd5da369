#include "destrank/metrics.hpp"

#include <algorithm>

#include "destrank/errors.hpp"

namespace destrank::eval {

namespace {

void check(const std::set<std::string>& relevant, int k) {
  if (relevant.empty()) throw Error(Errc::EmptyRelevantSet, "relevant set is empty");
  if (k < 1) throw Error(Errc::Usage, "cutoff k must be >= 1");
}

std::size_t hits_in_prefix(std::span<const std::string> ranking,
                           const std::set<std::string>& relevant, std::size_t k) {
  const auto end = std::min(k, ranking.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < end; ++i) hits += relevant.contains(ranking[i]) ? 1 : 0;
  return hits;
}

}  // namespace

double recall_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                   int k) {
  check(relevant, k);
  return static_cast<double>(hits_in_prefix(ranking, relevant, static_cast<std::size_t>(k))) /
         static_cast<double>(relevant.size());
}

double precision_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                      int k) {
  check(relevant, k);
  return static_cast<double>(hits_in_prefix(ranking, relevant, static_cast<std::size_t>(k))) /
         static_cast<double>(k);
}

double average_precision_at_k(std::span<const std::string> ranking,
                              const std::set<std::string>& relevant, int k) {
  check(relevant, k);
  const auto cutoff = std::min(static_cast<std::size_t>(k), ranking.size());
  // extended-precision accumulator
  long double sum = 0.0L;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cutoff; ++i) {
    if (!relevant.contains(ranking[i])) continue;
    ++hits;
    sum += static_cast<long double>(hits) / static_cast<long double>(i + 1);
  }
  const auto denom = std::min(relevant.size(), static_cast<std::size_t>(k));
  return static_cast<double>(sum / static_cast<long double>(denom));
}

double r_precision(std::span<const std::string> ranking, const std::set<std::string>& relevant) {
  if (relevant.empty()) throw Error(Errc::EmptyRelevantSet, "relevant set is empty");
  const auto r = relevant.size();
  if (ranking.size() < r) {
    throw Error(Errc::RankingTooShort, std::to_string(ranking.size()) + " < " + std::to_string(r));
  }
  return static_cast<double>(hits_in_prefix(ranking, relevant, r)) / static_cast<double>(r);
}

}  // namespace destrank::eval
