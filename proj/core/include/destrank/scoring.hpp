#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "destrank/bm25.hpp"
#include "destrank/corpus.hpp"
#include "destrank/dense.hpp"
#include "destrank/reformulation.hpp"

namespace destrank {

enum class Retriever { DenseTasB, DenseMiniLM, SparseBm25 };

std::string_view retriever_name(Retriever r) noexcept;  // "dense-tasb", ...
std::string_view retriever_label(Retriever r) noexcept;  // "Dense - TAS-B", ...
Retriever parse_retriever(std::string_view name);
bool is_dense(Retriever r) noexcept;

/// Tuned top-n per retriever: TAS-B 31, MiniLM 18, BM25 13.
int default_top_n(Retriever r) noexcept;

struct ScoringConfig {
  Retriever retriever = Retriever::SparseBm25;
  int top_n = 13;
  std::optional<std::string> encoder_id;
};

struct RankedEntry {
  std::string dest_id;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

/// Every corpus destination exactly once, by descending score; ties go to the
/// lexicographically smaller id.
struct RankedList {
  std::string qid;
  std::vector<RankedEntry> entries;

  std::vector<std::string> ids() const;
  bool operator==(const RankedList&) const = default;
};

/// Mean of the min(n, count) largest scores. Throws Error{EmptyScores} for an
/// empty input and Error{Usage} for n < 1.
double score_destination(std::span<const double> paragraph_scores, int n);

/// Scores q' against every paragraph of the corpus; the result is indexed by
/// ParagraphRef.
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual std::vector<double> paragraph_scores(const ReformulatedQuery& rq) const = 0;
};

/// BM25 over render_sparse(q').
class SparseBackend final : public ScoringBackend {
 public:
  explicit SparseBackend(const Corpus& corpus, sparse::TokenizerConfig cfg = {},
                         sparse::Bm25Params params = {});

  std::vector<double> paragraph_scores(const ReformulatedQuery& rq) const override;
  const sparse::Bm25Index& index() const noexcept { return index_; }

 private:
  sparse::TokenizerConfig cfg_;
  sparse::Bm25Index index_;
};

/// Cosine between Encode(render_dense(q')) and the stored paragraph vectors.
/// Every paragraph must have a "dest_id#index" vector, else Error{NotPrecomputed}.
class DenseBackend final : public ScoringBackend {
 public:
  DenseBackend(const Corpus& corpus, std::shared_ptr<const dense::EmbeddingStore> paragraphs,
               std::shared_ptr<const dense::EmbeddingProvider> queries);

  std::vector<double> paragraph_scores(const ReformulatedQuery& rq) const override;

 private:
  std::shared_ptr<const dense::EmbeddingStore> paragraphs_;
  std::shared_ptr<const dense::EmbeddingProvider> queries_;
  std::vector<const dense::Vector*> by_ref_;
};

/// Aggregates flat paragraph scores per destination and sorts.
RankedList rank_from_scores(std::string qid, const Corpus& corpus,
                            std::span<const double> paragraph_scores, int top_n);

RankedList rank_destinations(const ReformulatedQuery& rq, const Corpus& corpus,
                             const ScoringBackend& backend, const ScoringConfig& cfg);

/// One line of results.jsonl.
struct RunRecord {
  std::string qid;
  std::string method;
  std::string retriever;
  int top_n = 0;
  RankedList ranking;
};

/// Scores are written with 9 significant digits.
std::string to_jsonl(const RunRecord& record);
std::vector<RunRecord> parse_results(std::string_view jsonl);
std::vector<RunRecord> load_results(const std::string& path);

}  // namespace destrank
