#include "destrank/errors.hpp"

namespace destrank {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyDocument: return "EmptyDocument";
    case Errc::InvalidCorpus: return "InvalidCorpus";
    case Errc::UnknownDestination: return "UnknownDestination";
    case Errc::MissingQrels: return "MissingQrels";
    case Errc::DuplicateQid: return "DuplicateQid";
    case Errc::NetworkError: return "NetworkError";
    case Errc::CacheMiss: return "CacheMiss";
    case Errc::ApiError: return "ApiError";
    case Errc::MalformedCache: return "MalformedCache";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::MissingDestinationList: return "MissingDestinationList";
    case Errc::NotApplicable: return "NotApplicable";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::UnknownParagraph: return "UnknownParagraph";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::DuplicateKey: return "DuplicateKey";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::NotPrecomputed: return "NotPrecomputed";
    case Errc::EmptyScores: return "EmptyScores";
    case Errc::EmptyRelevantSet: return "EmptyRelevantSet";
    case Errc::RankingTooShort: return "RankingTooShort";
    case Errc::TooFewValues: return "TooFewValues";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::MissingRanking: return "MissingRanking";
    case Errc::Io: return "Io";
    case Errc::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace destrank
