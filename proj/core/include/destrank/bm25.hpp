#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "destrank/corpus.hpp"

namespace destrank::sparse {

struct TokenizerConfig {
  bool lowercase = true;
  std::set<std::string> stopwords;
};

/// Lowercases (ASCII), splits on runs of non-alphanumeric characters and drops
/// stopwords. Bytes >= 0x80 count as alphanumeric so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg = {});

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
  double epsilon = 0.25;
};

/// Okapi BM25 statistics over every paragraph of a corpus.
///
/// idf(t) = ln((N - df + 0.5) / (df + 0.5)); a negative raw idf is replaced
/// by epsilon times the mean of the positive raw idfs. Immutable once built,
/// so scoring is safe from any number of threads.
class Bm25Index {
 public:
  struct Posting {
    ParagraphRef paragraph;
    std::uint32_t tf;
  };

  /// Throws Error{EmptyCorpus} when there is nothing to index.
  static Bm25Index build(const Corpus& corpus, const TokenizerConfig& cfg = {},
                         const Bm25Params& params = {});
  /// Same, over bare token lists (one per paragraph).
  static Bm25Index build(const std::vector<std::vector<std::string>>& paragraphs,
                         const Bm25Params& params = {});

  std::size_t size() const noexcept { return doc_len_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  const Bm25Params& params() const noexcept { return params_; }
  std::size_t doc_len(ParagraphRef ref) const { return doc_len_.at(ref); }
  std::size_t doc_freq(std::string_view term) const;
  /// 0 for terms not in the index.
  double idf(std::string_view term) const;
  double raw_idf(std::string_view term) const;
  std::size_t term_freq(ParagraphRef ref, std::string_view term) const;
  std::size_t vocabulary_size() const noexcept { return terms_.size(); }

  /// Sum over query tokens (as a multiset) of
  /// idf * f * (k1 + 1) / (f + k1 * (1 - b + b * |d| / avgdl)).
  /// Throws Error{UnknownParagraph} for an out-of-range ref.
  double score_paragraph(const std::vector<std::string>& query_tokens, ParagraphRef ref) const;

  /// Scores of all N paragraphs, zeros included, indexed by ParagraphRef.
  /// Per paragraph the terms are added in query order, so the result is
  /// bit-identical to calling score_paragraph for each ref.
  std::vector<double> score_all(const std::vector<std::string>& query_tokens) const;

  /// JSON persistence; doubles are written with round-trip precision.
  std::string to_json() const;
  static Bm25Index from_json(std::string_view json_text);

 private:
  struct TermStats {
    std::size_t df = 0;
    double raw_idf = 0.0;
    double idf = 0.0;
    std::vector<Posting> postings;  // ascending paragraph order
  };

  void finalize();
  double term_weight(double idf, double tf, std::size_t len) const;
  const TermStats* lookup(std::string_view term) const;

  Bm25Params params_;
  double avgdl_ = 0.0;
  std::vector<std::size_t> doc_len_;
  std::unordered_map<std::string, TermStats> terms_;
};

}  // namespace destrank::sparse
