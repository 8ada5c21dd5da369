#include "destrank/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "destrank/errors.hpp"
#include "destrank/text.hpp"

namespace destrank {

using nlohmann::json;

namespace {

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool is_blank(std::string_view line) { return text::trim(line).empty(); }

// Visits non-empty lines of a JSONL document with their 1-based line number.
template <typename Fn>
void for_each_jsonl(std::string_view doc, Fn&& fn) {
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(doc)) {
    ++line_no;
    if (is_blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no));
    }
    if (!obj.is_object()) throw Error(Errc::MalformedLine, "line " + std::to_string(line_no));
    try {
      fn(obj, line_no);
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

Corpus::Corpus(std::vector<Destination> destinations) : destinations_(std::move(destinations)) {
  for (std::size_t d = 0; d < destinations_.size(); ++d) {
    const auto& dest = destinations_[d];
    if (dest.id.empty()) throw Error(Errc::InvalidCorpus, "destination with empty id");
    if (!by_id_.emplace(dest.id, d).second) throw Error(Errc::DuplicateId, dest.id);
    if (dest.paragraphs.empty()) throw Error(Errc::EmptyDocument, dest.id);
    for (std::size_t p = 0; p < dest.paragraphs.size(); ++p) {
      const auto& para = dest.paragraphs[p];
      if (para.index != p || para.dest_id != dest.id) {
        throw Error(Errc::InvalidCorpus, "paragraph numbering broken in " + dest.id);
      }
      flat_.emplace_back(d, p);
    }
    total_paragraphs_ += dest.paragraphs.size();
    offsets_.push_back(total_paragraphs_);
  }
}

const Destination* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &destinations_[it->second];
}

const Paragraph& Corpus::paragraph(ParagraphRef ref) const {
  const auto& [d, p] = flat_.at(ref);
  return destinations_[d].paragraphs[p];
}

std::vector<std::string> Corpus::names() const {
  std::vector<std::string> out;
  out.reserve(destinations_.size());
  for (const auto& d : destinations_) out.push_back(d.name);
  return out;
}

std::vector<std::string> chunk_document(std::string_view raw_text, std::size_t min_chars) {
  std::vector<std::string> out;
  std::string block;
  auto flush = [&] {
    auto t = text::trim(block);
    if (!t.empty() && utf8_length(t) >= min_chars) out.emplace_back(t);
    block.clear();
  };
  for (const auto& line : text::split_lines(raw_text)) {
    if (is_blank(line)) {
      flush();
      continue;
    }
    if (!block.empty()) block.push_back('\n');
    block += line;
  }
  flush();
  return out;
}

Destination make_destination(std::string_view name, std::string_view raw_text,
                             std::optional<std::string> id) {
  Destination dest;
  dest.name = std::string(text::trim(name));
  dest.id = id ? *id : text::slugify(dest.name);
  auto blocks = chunk_document(raw_text);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    dest.paragraphs.push_back(Paragraph{dest.id, i, std::move(blocks[i])});
  }
  return dest;
}

Corpus parse_corpus(std::string_view jsonl, std::size_t min_chars) {
  std::vector<Destination> dests;
  std::set<std::string> seen;
  for_each_jsonl(jsonl, [&](const json& obj, std::size_t) {
    Destination dest;
    dest.id = obj.at("id").get<std::string>();
    dest.name = obj.value("name", dest.id);
    if (!seen.insert(dest.id).second) throw Error(Errc::DuplicateId, dest.id);
    for (const auto& raw : obj.at("paragraphs")) {
      for (auto& block : chunk_document(raw.get<std::string>(), min_chars)) {
        dest.paragraphs.push_back(Paragraph{dest.id, dest.paragraphs.size(), std::move(block)});
      }
    }
    if (dest.paragraphs.empty()) throw Error(Errc::EmptyDocument, dest.id);
    dests.push_back(std::move(dest));
  });
  if (dests.empty()) throw Error(Errc::InvalidCorpus, "corpus has no destinations");
  return Corpus(std::move(dests));
}

Corpus load_corpus(const std::string& path) { return parse_corpus(text::read_file(path)); }

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& dest : corpus.destinations()) {
    json paras = json::array();
    for (const auto& p : dest.paragraphs) paras.push_back(p.text);
    json obj = {{"id", dest.id}, {"name", dest.name}, {"paragraphs", std::move(paras)}};
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << serialize_corpus(corpus);
}

const Qrels& Dataset::relevant_for(const std::string& qid) const {
  auto it = qrels.find(qid);
  if (it == qrels.end()) throw Error(Errc::MissingQrels, qid);
  return it->second;
}

Dataset parse_dataset(std::string_view queries_jsonl, std::string_view qrels_jsonl,
                      const Corpus* corpus) {
  Dataset ds;
  std::set<std::string> qids;
  for_each_jsonl(queries_jsonl, [&](const json& obj, std::size_t line_no) {
    Query q{obj.at("qid").get<std::string>(), obj.at("text").get<std::string>()};
    if (q.qid.empty() || text::trim(q.text).empty()) {
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": empty qid or text");
    }
    if (!qids.insert(q.qid).second) throw Error(Errc::DuplicateQid, q.qid);
    ds.queries.push_back(std::move(q));
  });
  for_each_jsonl(qrels_jsonl, [&](const json& obj, std::size_t line_no) {
    Qrels r;
    r.qid = obj.at("qid").get<std::string>();
    for (const auto& id : obj.at("relevant")) r.relevant.insert(id.get<std::string>());
    if (r.relevant.empty()) {
      throw Error(Errc::MalformedLine,
                  "line " + std::to_string(line_no) + ": empty relevant set for " + r.qid);
    }
    if (!qids.contains(r.qid)) throw Error(Errc::KeyMismatch, "qrels for unknown query " + r.qid);
    if (corpus) {
      for (const auto& id : r.relevant) {
        if (!corpus->contains(id)) throw Error(Errc::UnknownDestination, r.qid + " -> " + id);
      }
    }
    auto qid = r.qid;
    if (!ds.qrels.emplace(qid, std::move(r)).second) throw Error(Errc::DuplicateQid, qid);
  });
  for (const auto& q : ds.queries) {
    if (!ds.qrels.contains(q.qid)) throw Error(Errc::MissingQrels, q.qid);
  }
  return ds;
}

Dataset load_dataset(const std::string& queries_path, const std::string& qrels_path,
                     const Corpus* corpus) {
  return parse_dataset(text::read_file(queries_path), text::read_file(qrels_path), corpus);
}

}  // namespace destrank
