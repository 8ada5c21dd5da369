#include "destrank/scoring.hpp"

#include <algorithm>
#include <functional>

#include <json.hpp>

#include "destrank/errors.hpp"
#include "destrank/text.hpp"

namespace destrank {

using nlohmann::json;

std::string_view retriever_name(Retriever r) noexcept {
  switch (r) {
    case Retriever::DenseTasB: return "dense-tasb";
    case Retriever::DenseMiniLM: return "dense-minilm";
    case Retriever::SparseBm25: return "sparse-bm25";
  }
  return "sparse-bm25";
}

std::string_view retriever_label(Retriever r) noexcept {
  switch (r) {
    case Retriever::DenseTasB: return "Dense - TAS-B";
    case Retriever::DenseMiniLM: return "Dense - MiniLM";
    case Retriever::SparseBm25: return "Sparse - BM25";
  }
  return "Sparse - BM25";
}

Retriever parse_retriever(std::string_view name) {
  const auto n = text::to_lower_ascii(name);
  if (n == "dense-tasb" || n == "tas-b" || n == "tasb") return Retriever::DenseTasB;
  if (n == "dense-minilm" || n == "minilm") return Retriever::DenseMiniLM;
  if (n == "sparse-bm25" || n == "bm25" || n == "sparse") return Retriever::SparseBm25;
  throw Error(Errc::Usage, "unknown retriever '" + std::string(name) + "'");
}

bool is_dense(Retriever r) noexcept { return r != Retriever::SparseBm25; }

int default_top_n(Retriever r) noexcept {
  switch (r) {
    case Retriever::DenseTasB: return 31;
    case Retriever::DenseMiniLM: return 18;
    case Retriever::SparseBm25: return 13;
  }
  return 13;
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.dest_id);
  return out;
}

double score_destination(std::span<const double> paragraph_scores, int n) {
  if (paragraph_scores.empty()) throw Error(Errc::EmptyScores, "destination has no paragraphs");
  if (n < 1) throw Error(Errc::Usage, "top_n must be >= 1");
  std::vector<double> sorted(paragraph_scores.begin(), paragraph_scores.end());
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(n), sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take), sorted.end(),
                    std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += sorted[i];
  return sum / static_cast<double>(take);
}

SparseBackend::SparseBackend(const Corpus& corpus, sparse::TokenizerConfig cfg,
                             sparse::Bm25Params params)
    : cfg_(std::move(cfg)), index_(sparse::Bm25Index::build(corpus, cfg_, params)) {}

std::vector<double> SparseBackend::paragraph_scores(const ReformulatedQuery& rq) const {
  return index_.score_all(sparse::tokenize(render_sparse(rq), cfg_));
}

DenseBackend::DenseBackend(const Corpus& corpus,
                           std::shared_ptr<const dense::EmbeddingStore> paragraphs,
                           std::shared_ptr<const dense::EmbeddingProvider> queries)
    : paragraphs_(std::move(paragraphs)), queries_(std::move(queries)) {
  if (queries_->dim() != paragraphs_->dim()) {
    throw Error(Errc::DimMismatch, "query provider dim " + std::to_string(queries_->dim()) +
                                       " vs paragraph store dim " + std::to_string(paragraphs_->dim()));
  }
  by_ref_.reserve(corpus.total_paragraphs());
  for (ParagraphRef ref = 0; ref < corpus.total_paragraphs(); ++ref) {
    const auto& p = corpus.paragraph(ref);
    by_ref_.push_back(&paragraphs_->at(p.dest_id + "#" + std::to_string(p.index)));
  }
}

std::vector<double> DenseBackend::paragraph_scores(const ReformulatedQuery& rq) const {
  const dense::Vector q = queries_->embed(render_dense(rq));
  std::vector<double> scores;
  scores.reserve(by_ref_.size());
  for (const auto* v : by_ref_) scores.push_back(dense::cosine(q, *v));
  return scores;
}

RankedList rank_from_scores(std::string qid, const Corpus& corpus,
                            std::span<const double> paragraph_scores, int top_n) {
  if (paragraph_scores.size() != corpus.total_paragraphs()) {
    throw Error(Errc::InvalidCorpus, "score vector does not cover the corpus");
  }
  RankedList list;
  list.qid = std::move(qid);
  list.entries.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto begin = corpus.offset(d);
    const auto count = corpus.offset(d + 1) - begin;
    list.entries.push_back(RankedEntry{corpus.destinations()[d].id,
                                       score_destination(paragraph_scores.subspan(begin, count), top_n)});
  }
  std::sort(list.entries.begin(), list.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.dest_id < b.dest_id;
  });
  return list;
}

RankedList rank_destinations(const ReformulatedQuery& rq, const Corpus& corpus,
                             const ScoringBackend& backend, const ScoringConfig& cfg) {
  const auto scores = backend.paragraph_scores(rq);
  return rank_from_scores(rq.qid, corpus, scores, cfg.top_n);
}

std::string to_jsonl(const RunRecord& record) {
  json ranking = json::array();
  for (const auto& e : record.ranking.entries) {
    ranking.push_back({{"id", e.dest_id}, {"score", text::round_significant(e.score, 9)}});
  }
  json j = {{"qid", record.qid},
            {"method", record.method},
            {"retriever", record.retriever},
            {"top_n", record.top_n},
            {"ranking", std::move(ranking)}};
  return j.dump();
}

std::vector<RunRecord> parse_results(std::string_view jsonl) {
  std::vector<RunRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      RunRecord r;
      r.qid = j.at("qid").get<std::string>();
      r.method = j.value("method", "noqr");
      r.retriever = j.value("retriever", "");
      r.top_n = j.value("top_n", 0);
      r.ranking.qid = r.qid;
      for (const auto& e : j.at("ranking")) {
        r.ranking.entries.push_back({e.at("id").get<std::string>(), e.at("score").get<double>()});
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RunRecord> load_results(const std::string& path) {
  return parse_results(text::read_file(path));
}

}  // namespace destrank
