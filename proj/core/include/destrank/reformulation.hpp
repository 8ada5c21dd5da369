#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "destrank/corpus.hpp"
#include "destrank/llm_gateway.hpp"

namespace destrank {

enum class ReformMethod { NoQR, Q2E, Query2Doc, GenQR, EQR };

inline constexpr ReformMethod kAllMethods[] = {ReformMethod::NoQR, ReformMethod::GenQR,
                                               ReformMethod::Q2E, ReformMethod::Query2Doc,
                                               ReformMethod::EQR};

/// Wire name used in reformulated.jsonl, results.jsonl and embedding keys.
std::string_view method_name(ReformMethod m) noexcept;
/// Display name used in reports ("No QR", "Query2Doc", ...).
std::string_view method_label(ReformMethod m) noexcept;
/// Accepts wire names, display names and common aliases, case-insensitively.
ReformMethod parse_method(std::string_view name);

inline constexpr int kDefaultSubtopics = 12;

struct PromptOptions {
  bool few_shot = true;
  bool destination_list = true;

  bool operator==(const PromptOptions&) const = default;
};

struct Subtopic {
  std::string title;
  std::string elaboration;
  std::vector<std::string> example_destinations;

  bool operator==(const Subtopic&) const = default;
};

/// q' = q + LLM(q, prompt). EQR fills `segments`, the other LLM methods fill
/// `raw_expansion`, NoQR leaves both empty.
struct ReformulatedQuery {
  std::string qid;
  ReformMethod method = ReformMethod::NoQR;
  std::string original;
  std::vector<Subtopic> segments;
  std::string raw_expansion;
  std::optional<int> k;  // requested subtopic count, EQR only
  PromptOptions options;

  bool operator==(const ReformulatedQuery&) const = default;
};

struct PromptTemplate {
  ReformMethod method;
  std::string template_text;  // contains {query}; the EQR template also {k}
  std::string few_shot_block;
};

/// Throws Error{NotApplicable} for NoQR.
const PromptTemplate& prompt_template(ReformMethod method);

inline constexpr std::string_view kCorrectiveSuffix =
    "\n\nFollow the required output format exactly.";

/// Fills the method's template, then appends the few-shot block and the
/// newline-joined destination names as the options request.
std::string build_prompt(ReformMethod method, std::string_view query, int k,
                         const PromptOptions& options,
                         const std::vector<std::string>* destination_names = nullptr);

/// Extracts subtopics from lines such as
///   "Title - elaboration ... such as X and Y."  or  "Title: elaboration".
/// Several subtopics on one line (sentence-separated) are also recognised.
/// The count returned is what the model produced, which may differ from
/// `requested_k`. Throws Error{ParseFailure} when nothing is found.
std::vector<Subtopic> parse_eqr_output(std::string_view text, int requested_k);

/// Output-shape parsers for the single-expansion methods; each returns the
/// normalized expansion text or throws Error{ParseFailure}.
std::string parse_q2e_output(std::string_view text);
std::string parse_query2doc_output(std::string_view text);
std::string parse_genqr_output(std::string_view text);

/// Keyword merge: original, then every title, elaboration and example
/// destination (EQR) or the expansion with ';' and ',' turned into spaces.
std::string render_sparse(const ReformulatedQuery& rq);

/// "q [SEP] t1: e1 [SEP] t2: e2" for EQR, "q [SEP] expansion" otherwise,
/// plain q for NoQR.
std::string render_dense(const ReformulatedQuery& rq);

/// Runs queries through the LLM gateway with the per-method prompts.
class Reformulator {
 public:
  Reformulator(llm::LlmGateway& gateway, std::vector<std::string> destination_names);

  /// Retries once with kCorrectiveSuffix appended when the first answer does
  /// not parse; a second failure throws Error{ParseFailure}.
  ReformulatedQuery reformulate(const Query& query, ReformMethod method,
                                int k = kDefaultSubtopics,
                                const PromptOptions& options = {}) const;

 private:
  llm::LlmGateway& gateway_;
  std::vector<std::string> destination_names_;
};

std::string to_jsonl(const ReformulatedQuery& rq);
std::vector<ReformulatedQuery> parse_reformulated(std::string_view jsonl);
std::vector<ReformulatedQuery> load_reformulated(const std::string& path);

}  // namespace destrank
