#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "destrank/corpus.hpp"
#include "destrank/evaluation.hpp"
#include "destrank/llm_gateway.hpp"
#include "destrank/reformulation.hpp"
#include "destrank/scoring.hpp"

namespace destrank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Experiment manifest. Loaded from a flat JSON config, then overridden by
/// command-line flags.
struct RunConfig {
  std::string corpus;
  std::string queries;
  std::string qrels;
  std::string cache;
  std::string reformulated;  // optional precomputed reformulations
  std::map<std::string, std::string> embeddings;        // retriever name -> paragraph vectors
  std::map<std::string, std::string> query_embeddings;  // retriever name -> "qid#method" vectors
  std::string embed_url;                                // http embedding mode when set
  ReformMethod method = ReformMethod::NoQR;
  Retriever retriever = Retriever::SparseBm25;
  std::optional<int> top_n;
  int k_subtopics = kDefaultSubtopics;
  PromptOptions prompt_options;
  bool cache_only = false;
  std::string output_dir = ".";

  /// top_n when set, otherwise the retriever default.
  int effective_top_n() const;
};

/// Reads the flat JSON config. `embeddings` and `query_embeddings` accept
/// either a path (used for the configured retriever) or an object keyed by
/// retriever name.
RunConfig load_config(const std::string& path);
void apply_config_json(RunConfig& cfg, const std::string& json_text);

/// Reformulations for every dataset query. Uses cfg.reformulated when it
/// covers the method, else the LLM gateway. Cache misses are collected over
/// all queries and reported together as one CacheMiss error.
std::vector<ReformulatedQuery> obtain_reformulations(const RunConfig& cfg, const Corpus& corpus,
                                                     const Dataset& dataset, ReformMethod method,
                                                     int k);

std::unique_ptr<ScoringBackend> make_backend(const RunConfig& cfg, const Corpus& corpus,
                                             const std::vector<ReformulatedQuery>& reformulations);

eval::RunRankings rank_all(const std::vector<ReformulatedQuery>& reformulations,
                           const Corpus& corpus, const ScoringBackend& backend, int top_n);

/// Each command returns a process exit status: 0 success, 1 runtime failure,
/// 2 usage or configuration error. Diagnostics go to `err`.
int cmd_import(const std::string& raw_pages_path, const std::string& out_corpus_path,
               std::ostream& err);
int cmd_reformulate(const RunConfig& cfg, std::ostream& err);
int cmd_run(const RunConfig& cfg, std::ostream& err);
int cmd_evaluate(const std::string& results_path, const RunConfig& cfg,
                 const std::vector<std::string>& metric_names,
                 const std::optional<std::string>& baseline_results, std::ostream& out,
                 std::ostream& err);
int cmd_sweep(const RunConfig& cfg, const std::string& parameter, const std::string& range,
              const std::vector<std::string>& metric_names, std::ostream& err);
int cmd_cache_stats(const std::string& cache_path, std::ostream& out, std::ostream& err);

/// Full argv entry point used by the destrank binary.
int run_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace destrank::cli
