#include "destrank/reformulation.hpp"

#include <cctype>

#include <json.hpp>

#include "destrank/errors.hpp"
#include "destrank/text.hpp"

namespace destrank {

using nlohmann::json;

std::string_view method_name(ReformMethod m) noexcept {
  switch (m) {
    case ReformMethod::NoQR: return "noqr";
    case ReformMethod::Q2E: return "q2e";
    case ReformMethod::Query2Doc: return "query2doc";
    case ReformMethod::GenQR: return "genqr";
    case ReformMethod::EQR: return "eqr";
  }
  return "noqr";
}

std::string_view method_label(ReformMethod m) noexcept {
  switch (m) {
    case ReformMethod::NoQR: return "No QR";
    case ReformMethod::Q2E: return "Q2E";
    case ReformMethod::Query2Doc: return "Query2Doc";
    case ReformMethod::GenQR: return "GenQR";
    case ReformMethod::EQR: return "EQR";
  }
  return "No QR";
}

ReformMethod parse_method(std::string_view name) {
  std::string n;
  for (char c : text::to_lower_ascii(name)) {
    if (c != '-' && c != '_' && c != ' ') n.push_back(c);
  }
  if (n == "noqr" || n == "none") return ReformMethod::NoQR;
  if (n == "q2e") return ReformMethod::Q2E;
  if (n == "query2doc" || n == "q2d") return ReformMethod::Query2Doc;
  if (n == "genqr" || n == "gqr") return ReformMethod::GenQR;
  if (n == "eqr") return ReformMethod::EQR;
  throw Error(Errc::Usage, "unknown reformulation method '" + std::string(name) + "'");
}

namespace {

std::string strip_markup(std::string_view s) {
  std::string out(s);
  for (std::string_view token : {"**", "__", "[SEP]"}) {
    for (auto pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos)) {
      out.replace(pos, token.size(), token == "[SEP]" ? " " : "");
    }
  }
  return out;
}

// Drops a leading list marker: "-", "*", "•", "1.", "2)".
std::string_view strip_bullet(std::string_view line) {
  line = text::trim(line);
  if (line.starts_with("- ") || line.starts_with("* ")) return text::trim(line.substr(2));
  if (line.starts_with("\xE2\x80\xA2")) return text::trim(line.substr(3));
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') && line[i + 1] == ' ') {
    return text::trim(line.substr(i + 2));
  }
  return line;
}

bool is_connector(std::string_view w) {
  static constexpr std::string_view kSmall[] = {"and", "&",  "of", "the", "for", "in", "to",
                                                "with", "or", "on", "a",   "an",  "by", "at"};
  for (auto s : kSmall) {
    if (w == s) return true;
  }
  return false;
}

// Subtopic titles are short title-case phrases: "Beach Destinations".
bool looks_like_title(std::string_view t) {
  t = text::trim(t);
  if (t.empty() || t.size() > 60) return false;
  if (!std::isupper(static_cast<unsigned char>(t.front())) &&
      !std::isdigit(static_cast<unsigned char>(t.front()))) {
    return false;
  }
  int words = 0;
  std::size_t pos = 0;
  while (pos < t.size()) {
    auto end = t.find(' ', pos);
    if (end == std::string_view::npos) end = t.size();
    auto w = t.substr(pos, end - pos);
    pos = end + 1;
    if (w.empty()) continue;
    ++words;
    if (w.find_first_of(".,;!?") != std::string_view::npos) return false;
    const auto c = static_cast<unsigned char>(w.front());
    if (!(std::isupper(c) || std::isdigit(c) || c >= 0x80 || is_connector(w))) return false;
  }
  return words >= 1 && words <= 6;
}

struct Header {
  std::string title;
  std::string rest;
};

std::optional<Header> match_header(std::string_view unit) {
  static constexpr std::string_view kSeps[] = {" - ", " \xE2\x80\x93 ", " \xE2\x80\x94 ", ": "};
  std::size_t best = std::string_view::npos;
  std::size_t sep_len = 0;
  for (auto sep : kSeps) {
    auto p = unit.find(sep);
    if (p != std::string_view::npos && p < best) {
      best = p;
      sep_len = sep.size();
    }
  }
  if (best == std::string_view::npos) return std::nullopt;
  auto title = text::trim(unit.substr(0, best));
  auto rest = text::trim(unit.substr(best + sep_len));
  if (rest.empty() || !looks_like_title(title)) return std::nullopt;
  return Header{std::string(title), std::string(rest)};
}

// Splits after '.', '!' or '?' followed by a space.
std::vector<std::string_view> sentence_units(std::string_view line) {
  std::vector<std::string_view> units;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    if ((line[i] == '.' || line[i] == '!' || line[i] == '?') && line[i + 1] == ' ') {
      units.push_back(line.substr(start, i + 1 - start));
      start = i + 2;
    }
  }
  if (start < line.size()) units.push_back(line.substr(start));
  return units;
}

std::vector<std::string> split_examples(std::string_view clause) {
  std::string s(clause);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == ';' || s.back() == ' ')) {
    s.pop_back();
  }
  std::vector<std::string> parts{s};
  for (std::string_view sep : {", and ", ", or ", " and ", " or ", ", "}) {
    std::vector<std::string> next;
    for (const auto& p : parts) {
      std::size_t start = 0;
      for (auto pos = p.find(sep); pos != std::string::npos; pos = p.find(sep, start)) {
        next.push_back(p.substr(start, pos - start));
        start = pos + sep.size();
      }
      next.push_back(p.substr(start));
    }
    parts = std::move(next);
  }
  std::vector<std::string> out;
  for (const auto& p : parts) {
    auto t = text::trim(p);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<std::string> extract_examples(std::string_view elaboration) {
  const std::string lower = text::to_lower_ascii(elaboration);
  auto pos = lower.rfind("such as ");
  if (pos == std::string::npos) return {};
  auto clause = elaboration.substr(pos + 8);
  // Only a trailing clause counts; "such as surfing. Great for ..." does not.
  auto trimmed = text::trim(clause);
  for (std::size_t i = 0; i + 1 < trimmed.size(); ++i) {
    if ((trimmed[i] == '.' || trimmed[i] == '!' || trimmed[i] == '?') && trimmed[i + 1] == ' ') {
      return {};
    }
  }
  return split_examples(trimmed);
}

[[noreturn]] void parse_failure(ReformMethod m, std::string_view raw) {
  throw Error(Errc::ParseFailure, std::string(method_name(m)) + ": " + std::string(raw));
}

}  // namespace

std::vector<Subtopic> parse_eqr_output(std::string_view raw, int /*requested_k*/) {
  std::vector<Subtopic> out;
  const std::string cleaned = strip_markup(raw);
  bool open = false;  // whether the last subtopic may still take continuation text
  for (const auto& line : text::split_lines(cleaned)) {
    auto body = strip_bullet(line);
    if (body.empty()) {
      open = false;
      continue;
    }
    for (auto unit : sentence_units(body)) {
      if (auto h = match_header(unit)) {
        out.push_back(Subtopic{std::move(h->title), std::move(h->rest), {}});
        open = true;
      } else if (open) {
        out.back().elaboration += ' ';
        out.back().elaboration += text::trim(unit);
      }
    }
  }
  if (out.empty()) parse_failure(ReformMethod::EQR, raw);
  for (auto& s : out) {
    s.elaboration = text::squash_whitespace(s.elaboration);
    s.example_destinations = extract_examples(s.elaboration);
  }
  return out;
}

std::string parse_q2e_output(std::string_view raw) {
  std::string s = strip_markup(raw);
  auto body = text::trim(s);
  if (text::starts_with_icase(body, "keywords:")) body = text::trim(body.substr(9));

  std::vector<std::string> keywords;
  for (const auto& line : text::split_lines(body)) {
    std::string_view rest = strip_bullet(line);
    std::size_t start = 0;
    while (start <= rest.size()) {
      auto semi = rest.find(';', start);
      if (semi == std::string_view::npos) semi = rest.size();
      auto kw = text::trim(rest.substr(start, semi - start));
      if (!kw.empty()) keywords.emplace_back(kw);
      start = semi + 1;
    }
  }
  if (keywords.size() == 1 && keywords[0].find(", ") != std::string::npos) {
    keywords = split_examples(keywords[0]);
  }
  if (keywords.empty()) parse_failure(ReformMethod::Q2E, raw);
  std::string out;
  for (const auto& kw : keywords) {
    if (!out.empty()) out += "; ";
    out += kw;
  }
  return out;
}

std::string parse_query2doc_output(std::string_view raw) {
  const std::string s = text::squash_whitespace(strip_markup(raw));
  // Numbered passages "1. ... 2. ... 3. ..."; at least the first is required.
  std::vector<std::string> passages;
  std::size_t search = 0;
  for (int n = 1;; ++n) {
    const std::string marker = std::to_string(n) + ". ";
    auto pos = s.find(marker, search);
    while (pos != std::string::npos && pos > 0 && s[pos - 1] != ' ') {
      pos = s.find(marker, pos + 1);
    }
    if (pos == std::string::npos) break;
    if (!passages.empty()) {
      passages.back() = std::string(text::trim(std::string_view(s).substr(search, pos - search)));
    }
    passages.emplace_back();
    search = pos + marker.size();
  }
  if (passages.empty()) parse_failure(ReformMethod::Query2Doc, raw);
  passages.back() = std::string(text::trim(std::string_view(s).substr(search)));
  std::string out;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (passages[i].empty()) parse_failure(ReformMethod::Query2Doc, raw);
    if (!out.empty()) out += ' ';
    out += std::to_string(i + 1) + ". " + passages[i];
  }
  return out;
}

std::string parse_genqr_output(std::string_view raw) {
  const std::string s = strip_markup(raw);
  for (const auto& line : text::split_lines(s)) {
    auto t = text::trim(line);
    if (text::starts_with_icase(t, "paraphrase:")) t = text::trim(t.substr(11));
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = text::trim(t.substr(1, t.size() - 2));
    if (!t.empty()) return text::squash_whitespace(t);
  }
  parse_failure(ReformMethod::GenQR, raw);
}

std::string render_sparse(const ReformulatedQuery& rq) {
  std::string out = rq.original;
  auto add = [&out](std::string_view piece) {
    if (piece.empty()) return;
    out.push_back(' ');
    out += piece;
  };
  if (rq.method == ReformMethod::NoQR) return out;
  if (rq.method == ReformMethod::EQR) {
    for (const auto& seg : rq.segments) {
      add(seg.title);
      add(seg.elaboration);
      for (const auto& d : seg.example_destinations) add(d);
    }
    return out;
  }
  std::string expansion = rq.raw_expansion;
  for (char& c : expansion) {
    if (c == ';' || c == ',') c = ' ';
  }
  add(text::squash_whitespace(expansion));
  return out;
}

std::string render_dense(const ReformulatedQuery& rq) {
  std::string out = rq.original;
  if (rq.method == ReformMethod::NoQR) return out;
  if (rq.method == ReformMethod::EQR) {
    for (const auto& seg : rq.segments) {
      out += " [SEP] ";
      out += seg.title;
      out += ": ";
      out += seg.elaboration;
    }
    return out;
  }
  if (!rq.raw_expansion.empty()) {
    out += " [SEP] ";
    out += rq.raw_expansion;
  }
  return out;
}

Reformulator::Reformulator(llm::LlmGateway& gateway, std::vector<std::string> destination_names)
    : gateway_(gateway), destination_names_(std::move(destination_names)) {}

ReformulatedQuery Reformulator::reformulate(const Query& query, ReformMethod method, int k,
                                            const PromptOptions& options) const {
  ReformulatedQuery rq;
  rq.qid = query.qid;
  rq.method = method;
  rq.original = query.text;
  rq.options = options;
  if (method == ReformMethod::NoQR) return rq;
  if (method == ReformMethod::EQR) {
    if (k < 1) throw Error(Errc::Usage, "EQR needs k >= 1");
    rq.k = k;
  }

  llm::ChatRequest request;
  request.model = gateway_.model();
  request.user_prompt = build_prompt(method, query.text, k, options, &destination_names_);

  auto parse = [&](const std::string& raw) {
    switch (method) {
      case ReformMethod::EQR: rq.segments = parse_eqr_output(raw, k); break;
      case ReformMethod::Q2E: rq.raw_expansion = parse_q2e_output(raw); break;
      case ReformMethod::Query2Doc: rq.raw_expansion = parse_query2doc_output(raw); break;
      case ReformMethod::GenQR: rq.raw_expansion = parse_genqr_output(raw); break;
      case ReformMethod::NoQR: break;
    }
  };

  const auto first = gateway_.complete(request);
  try {
    parse(first.text);
    return rq;
  } catch (const Error& e) {
    if (e.code() != Errc::ParseFailure) throw;
  }
  request.user_prompt += kCorrectiveSuffix;
  const auto second = gateway_.complete(request);
  parse(second.text);
  return rq;
}

std::string to_jsonl(const ReformulatedQuery& rq) {
  json segments = json::array();
  for (const auto& s : rq.segments) {
    segments.push_back({{"title", s.title},
                        {"elaboration", s.elaboration},
                        {"example_destinations", s.example_destinations}});
  }
  json j = {{"qid", rq.qid},
            {"method", method_name(rq.method)},
            {"original", rq.original},
            {"k", rq.k ? json(*rq.k) : json(nullptr)},
            {"options",
             {{"few_shot", rq.options.few_shot}, {"destination_list", rq.options.destination_list}}},
            {"segments", std::move(segments)},
            {"raw_expansion", rq.raw_expansion}};
  return j.dump();
}

std::vector<ReformulatedQuery> parse_reformulated(std::string_view jsonl) {
  std::vector<ReformulatedQuery> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      ReformulatedQuery rq;
      rq.qid = j.at("qid").get<std::string>();
      rq.method = parse_method(j.at("method").get<std::string>());
      rq.original = j.at("original").get<std::string>();
      if (j.contains("k") && !j["k"].is_null()) rq.k = j["k"].get<int>();
      if (j.contains("options")) {
        rq.options.few_shot = j["options"].value("few_shot", true);
        rq.options.destination_list = j["options"].value("destination_list", true);
      }
      for (const auto& s : j.value("segments", json::array())) {
        rq.segments.push_back(Subtopic{s.at("title").get<std::string>(),
                                       s.at("elaboration").get<std::string>(),
                                       s.value("example_destinations", std::vector<std::string>{})});
      }
      rq.raw_expansion = j.value("raw_expansion", "");
      out.push_back(std::move(rq));
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ReformulatedQuery> load_reformulated(const std::string& path) {
  return parse_reformulated(text::read_file(path));
}

}  // namespace destrank
