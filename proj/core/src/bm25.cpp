#include "destrank/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <json.hpp>

#include "destrank/errors.hpp"

namespace destrank::sparse {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !cfg.stopwords.contains(current)) tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(cfg.lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

Bm25Index Bm25Index::build(const Corpus& corpus, const TokenizerConfig& cfg,
                           const Bm25Params& params) {
  std::vector<std::vector<std::string>> paragraphs;
  paragraphs.reserve(corpus.total_paragraphs());
  for (ParagraphRef ref = 0; ref < corpus.total_paragraphs(); ++ref) {
    paragraphs.push_back(tokenize(corpus.paragraph(ref).text, cfg));
  }
  return build(paragraphs, params);
}

Bm25Index Bm25Index::build(const std::vector<std::vector<std::string>>& paragraphs,
                           const Bm25Params& params) {
  if (paragraphs.empty()) throw Error(Errc::EmptyCorpus, "no paragraphs to index");
  Bm25Index index;
  index.params_ = params;
  index.doc_len_.reserve(paragraphs.size());
  std::size_t total_len = 0;
  for (ParagraphRef ref = 0; ref < paragraphs.size(); ++ref) {
    const auto& tokens = paragraphs[ref];
    index.doc_len_.push_back(tokens.size());
    total_len += tokens.size();
    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) {
      index.terms_[std::string(term)].postings.push_back({ref, tf});
    }
  }
  if (total_len == 0) throw Error(Errc::EmptyCorpus, "paragraphs contain no tokens");
  index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(paragraphs.size());
  index.finalize();
  return index;
}

void Bm25Index::finalize() {
  const double n = static_cast<double>(doc_len_.size());
  // summed in term order so the floor does not depend on hash layout
  std::vector<std::pair<std::string_view, TermStats*>> ordered;
  ordered.reserve(terms_.size());
  for (auto& [term, st] : terms_) ordered.emplace_back(term, &st);
  std::sort(ordered.begin(), ordered.end());
  double positive_sum = 0.0;
  std::size_t positive_count = 0;
  for (auto& [term, st] : ordered) {
    st->df = st->postings.size();
    const double df = static_cast<double>(st->df);
    st->raw_idf = std::log(n - df + 0.5) - std::log(df + 0.5);
    st->idf = st->raw_idf;
    if (st->raw_idf > 0.0) {
      positive_sum += st->raw_idf;
      ++positive_count;
    }
  }
  const double floor =
      positive_count ? params_.epsilon * positive_sum / static_cast<double>(positive_count) : 0.0;
  for (auto& [term, st] : terms_) {
    if (st.raw_idf < 0.0) st.idf = floor;
  }
}

const Bm25Index::TermStats* Bm25Index::lookup(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  return it == terms_.end() ? nullptr : &it->second;
}

std::size_t Bm25Index::doc_freq(std::string_view term) const {
  const auto* st = lookup(term);
  return st ? st->df : 0;
}

double Bm25Index::idf(std::string_view term) const {
  const auto* st = lookup(term);
  return st ? st->idf : 0.0;
}

double Bm25Index::raw_idf(std::string_view term) const {
  const auto* st = lookup(term);
  return st ? st->raw_idf : 0.0;
}

std::size_t Bm25Index::term_freq(ParagraphRef ref, std::string_view term) const {
  const auto* st = lookup(term);
  if (!st) return 0;
  auto it = std::lower_bound(st->postings.begin(), st->postings.end(), ref,
                             [](const Posting& p, ParagraphRef r) { return p.paragraph < r; });
  return (it != st->postings.end() && it->paragraph == ref) ? it->tf : 0;
}

double Bm25Index::term_weight(double idf, double tf, std::size_t len) const {
  const double norm = params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(len) / avgdl_);
  return idf * (tf * (params_.k1 + 1.0) / (tf + norm));
}

double Bm25Index::score_paragraph(const std::vector<std::string>& query_tokens,
                                  ParagraphRef ref) const {
  if (ref >= doc_len_.size()) throw Error(Errc::UnknownParagraph, std::to_string(ref));
  double score = 0.0;
  for (const auto& token : query_tokens) {
    const auto* st = lookup(token);
    if (!st) continue;
    const auto tf = term_freq(ref, token);
    if (tf == 0) continue;
    score += term_weight(st->idf, static_cast<double>(tf), doc_len_[ref]);
  }
  return score;
}

std::vector<double> Bm25Index::score_all(const std::vector<std::string>& query_tokens) const {
  std::vector<double> scores(doc_len_.size(), 0.0);
  for (const auto& token : query_tokens) {
    const auto* st = lookup(token);
    if (!st) continue;
    for (const auto& p : st->postings) {
      scores[p.paragraph] += term_weight(st->idf, static_cast<double>(p.tf), doc_len_[p.paragraph]);
    }
  }
  return scores;
}

std::string Bm25Index::to_json() const {
  json terms = json::object();
  for (const auto& [term, st] : terms_) {
    json postings = json::array();
    for (const auto& p : st.postings) postings.push_back({p.paragraph, p.tf});
    terms[term] = {{"df", st.df}, {"raw_idf", st.raw_idf}, {"idf", st.idf}, {"postings", postings}};
  }
  json j = {{"k1", params_.k1},
            {"b", params_.b},
            {"epsilon", params_.epsilon},
            {"N", doc_len_.size()},
            {"avgdl", avgdl_},
            {"doc_len", doc_len_},
            {"terms", std::move(terms)}};
  return j.dump();
}

Bm25Index Bm25Index::from_json(std::string_view json_text) {
  Bm25Index index;
  try {
    json j = json::parse(json_text);
    index.params_ = {j.at("k1").get<double>(), j.at("b").get<double>(),
                     j.at("epsilon").get<double>()};
    index.avgdl_ = j.at("avgdl").get<double>();
    index.doc_len_ = j.at("doc_len").get<std::vector<std::size_t>>();
    for (const auto& [term, t] : j.at("terms").items()) {
      TermStats st;
      st.df = t.at("df").get<std::size_t>();
      st.raw_idf = t.at("raw_idf").get<double>();
      st.idf = t.at("idf").get<double>();
      for (const auto& p : t.at("postings")) {
        st.postings.push_back({p.at(0).get<ParagraphRef>(), p.at(1).get<std::uint32_t>()});
      }
      index.terms_.emplace(term, std::move(st));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedLine, std::string("index.json: ") + e.what());
  }
  if (index.doc_len_.empty()) throw Error(Errc::EmptyCorpus, "index.json has no paragraphs");
  return index;
}

}  // namespace destrank::sparse
