#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace destrank {

/// Paragraphs shorter than this (in UTF-8 code points, after trimming) are
/// dropped by chunk_document. Filters headings and navigation stubs.
inline constexpr std::size_t kMinParagraphChars = 20;

struct Paragraph {
  std::string dest_id;
  std::size_t index = 0;
  std::string text;

  bool operator==(const Paragraph&) const = default;
};

struct Destination {
  std::string id;
  std::string name;
  std::vector<Paragraph> paragraphs;

  bool operator==(const Destination&) const = default;
};

/// Flat position of a paragraph within a Corpus: paragraphs of destination 0
/// first, in order, then destination 1, and so on.
using ParagraphRef = std::size_t;

/// Validated, immutable destination collection.
class Corpus {
 public:
  Corpus() = default;
  /// Validates ids (non-empty, unique) and paragraph indices.
  explicit Corpus(std::vector<Destination> destinations);

  const std::vector<Destination>& destinations() const noexcept { return destinations_; }
  std::size_t size() const noexcept { return destinations_.size(); }
  std::size_t total_paragraphs() const noexcept { return total_paragraphs_; }

  const Destination* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  /// First flat ref of destination `dest_index`; offsets(size()) == total_paragraphs().
  ParagraphRef offset(std::size_t dest_index) const { return offsets_.at(dest_index); }
  const Paragraph& paragraph(ParagraphRef ref) const;

  std::vector<std::string> names() const;

  bool operator==(const Corpus& other) const { return destinations_ == other.destinations_; }

 private:
  std::vector<Destination> destinations_;
  std::vector<ParagraphRef> offsets_{0};
  std::vector<std::pair<std::size_t, std::size_t>> flat_;  // ref -> (dest, para)
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t total_paragraphs_ = 0;
};

/// Splits raw page text on blank-line boundaries (two or more consecutive
/// newlines), trims each block and drops blocks shorter than `min_chars`.
std::vector<std::string> chunk_document(std::string_view raw_text,
                                        std::size_t min_chars = kMinParagraphChars);

/// Reads corpus.jsonl. Every listed paragraph is re-chunked; a destination
/// with no surviving paragraph is an EmptyDocument error and an empty file is
/// an InvalidCorpus error.
Corpus load_corpus(const std::string& path);
Corpus parse_corpus(std::string_view jsonl, std::size_t min_chars = kMinParagraphChars);
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::string& path);

/// Builds a Destination from a raw page; the id defaults to slugify(name).
Destination make_destination(std::string_view name, std::string_view raw_text,
                             std::optional<std::string> id = std::nullopt);

struct Query {
  std::string qid;
  std::string text;

  bool operator==(const Query&) const = default;
};

struct Qrels {
  std::string qid;
  std::set<std::string> relevant;

  bool operator==(const Qrels&) const = default;
};

struct Dataset {
  std::vector<Query> queries;
  std::map<std::string, Qrels> qrels;

  const Qrels& relevant_for(const std::string& qid) const;
};

/// Loads queries.jsonl and qrels.jsonl and cross-validates them. When `corpus`
/// is given, every relevant id must name one of its destinations.
Dataset load_dataset(const std::string& queries_path, const std::string& qrels_path,
                     const Corpus* corpus = nullptr);
Dataset parse_dataset(std::string_view queries_jsonl, std::string_view qrels_jsonl,
                      const Corpus* corpus = nullptr);

}  // namespace destrank
