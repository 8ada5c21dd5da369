#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace destrank {

enum class Errc {
  // corpus
  MalformedLine,
  DuplicateId,
  EmptyDocument,
  InvalidCorpus,
  UnknownDestination,
  MissingQrels,
  DuplicateQid,
  // llm_gateway
  NetworkError,
  CacheMiss,
  ApiError,
  MalformedCache,
  // reformulation
  ParseFailure,
  MissingDestinationList,
  NotApplicable,
  // sparse_retrieval
  EmptyCorpus,
  UnknownParagraph,
  // dense_retrieval
  DimMismatch,
  DuplicateKey,
  MalformedHeader,
  NotPrecomputed,
  // destination_scoring
  EmptyScores,
  // evaluation
  EmptyRelevantSet,
  RankingTooShort,
  TooFewValues,
  KeyMismatch,
  ZeroVariance,
  MissingRanking,
  // plumbing
  Io,
  Usage,
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library. The code identifies the failure
/// class; the message carries the offending line number, id or digest.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace destrank
