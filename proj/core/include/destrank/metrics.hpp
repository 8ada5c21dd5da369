#pragma once

#include <set>
#include <span>
#include <string>

// Binary-relevance ranking metrics. All of them read only the order of the
// ranking, never the scores.
namespace destrank::eval {

/// |top-k ∩ relevant| / |relevant|. Throws Error{EmptyRelevantSet}, Error{Usage} for k < 1.
double recall_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant, int k);

/// |top-k ∩ relevant| / k.
double precision_at_k(std::span<const std::string> ranking, const std::set<std::string>& relevant,
                      int k);

/// Truncated AP: sum_{i<=k} P@i * rel_i / min(|relevant|, k).
double average_precision_at_k(std::span<const std::string> ranking,
                              const std::set<std::string>& relevant, int k);

/// Precision at R = |relevant|. Throws Error{RankingTooShort} if the ranking
/// has fewer than R entries.
double r_precision(std::span<const std::string> ranking, const std::set<std::string>& relevant);

}  // namespace destrank::eval
