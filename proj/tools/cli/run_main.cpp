#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "destrank/errors.hpp"

namespace destrank::cli {

namespace {

struct Flags {
  std::string config;
  std::string corpus, queries, qrels, cache, reformulated, embed_url, out;
  std::vector<std::string> embeddings, query_embeddings;
  std::string method, retriever;
  std::optional<int> top_n, k;
  std::optional<bool> few_shot, dest_list;
  bool cache_only = false;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--corpus", f.corpus, "corpus.jsonl");
  cmd->add_option("--queries", f.queries, "queries.jsonl");
  cmd->add_option("--qrels", f.qrels, "qrels.jsonl");
  cmd->add_option("--cache", f.cache, "LLM response cache");
  cmd->add_option("--reformulated", f.reformulated, "precomputed reformulated.jsonl");
  cmd->add_option("--embeddings", f.embeddings, "paragraph embeddings, PATH or RETRIEVER=PATH");
  cmd->add_option("--query-embeddings", f.query_embeddings, "query embeddings, PATH or RETRIEVER=PATH");
  cmd->add_option("--embed-url", f.embed_url, "embedding service base URL");
  cmd->add_option("--method", f.method, "noqr, q2e, query2doc, genqr, eqr");
  cmd->add_option("--retriever", f.retriever, "dense-tasb, dense-minilm, sparse-bm25");
  cmd->add_option("--top-n", f.top_n, "paragraphs averaged per destination");
  cmd->add_option("--k", f.k, "EQR subtopic count");
  cmd->add_flag("--few-shot,!--no-few-shot", f.few_shot, "include the few-shot example");
  cmd->add_flag("--dest-list,!--no-dest-list", f.dest_list, "append the destination list");
  cmd->add_flag("--cache-only", f.cache_only, "never call the LLM API");
  cmd->add_option("--out", f.out, "output directory");
}

std::map<std::string, std::string> path_map(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      out[""] = item;
    } else {
      out[std::string(retriever_name(parse_retriever(item.substr(0, eq))))] = item.substr(eq + 1);
    }
  }
  return out;
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.corpus.empty()) cfg.corpus = f.corpus;
  if (!f.queries.empty()) cfg.queries = f.queries;
  if (!f.qrels.empty()) cfg.qrels = f.qrels;
  if (!f.cache.empty()) cfg.cache = f.cache;
  if (!f.reformulated.empty()) cfg.reformulated = f.reformulated;
  if (!f.embed_url.empty()) cfg.embed_url = f.embed_url;
  if (!f.out.empty()) cfg.output_dir = f.out;
  for (const auto& [k, v] : path_map(f.embeddings)) cfg.embeddings[k] = v;
  for (const auto& [k, v] : path_map(f.query_embeddings)) cfg.query_embeddings[k] = v;
  if (!f.method.empty()) cfg.method = parse_method(f.method);
  if (!f.retriever.empty()) cfg.retriever = parse_retriever(f.retriever);
  if (f.top_n) cfg.top_n = f.top_n;
  if (f.k) cfg.k_subtopics = *f.k;
  if (f.few_shot) cfg.prompt_options.few_shot = *f.few_shot;
  if (f.dest_list) cfg.prompt_options.destination_list = *f.dest_list;
  if (f.cache_only) cfg.cache_only = true;
  return cfg;
}

std::vector<std::string> split_metrics(const std::string& list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = std::min(list.find(',', start), list.size());
    auto item = list.substr(start, comma - start);
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

}  // namespace

int run_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Destination ranking experiments", "destrank"};
  app.require_subcommand(1);

  std::string raw_path, import_out;
  auto* import_cmd = app.add_subcommand("import", "chunk raw pages into corpus.jsonl");
  import_cmd->add_option("raw", raw_path, "JSONL of {name,text} or a directory of .txt pages")->required();
  import_cmd->add_option("--out", import_out, "output corpus.jsonl")->required();

  Flags f;
  auto* reform_cmd = app.add_subcommand("reformulate", "write reformulated.jsonl");
  add_run_flags(reform_cmd, f);
  auto* run_cmd = app.add_subcommand("run", "rank destinations and write results.jsonl");
  add_run_flags(run_cmd, f);

  std::string results, baseline, metrics = "MAP@30,MAP@50,Recall@30,Recall@50,R-Precision";
  auto* eval_cmd = app.add_subcommand("evaluate", "score results.jsonl");
  add_run_flags(eval_cmd, f);
  eval_cmd->add_option("--results", results, "results.jsonl")->required();
  eval_cmd->add_option("--baseline", baseline, "baseline results.jsonl");
  eval_cmd->add_option("--metrics", metrics, "comma-separated metric list");

  std::string parameter, range;
  auto* sweep_cmd = app.add_subcommand("sweep", "vary top_n or k_subtopics");
  add_run_flags(sweep_cmd, f);
  sweep_cmd->add_option("--parameter", parameter, "top_n or k_subtopics")->required();
  sweep_cmd->add_option("--range", range, "a:b or a comma list")->required();
  sweep_cmd->add_option("--metrics", metrics, "comma-separated metric list");

  std::string cache_path;
  auto* stats_cmd = app.add_subcommand("cache-stats", "summarize an LLM cache");
  stats_cmd->add_option("cache", cache_path, "cache.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (import_cmd->parsed()) return cmd_import(raw_path, import_out, err);
  if (stats_cmd->parsed()) return cmd_cache_stats(cache_path, out, err);

  RunConfig cfg;
  try {
    cfg = resolve(f);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::Usage ? kExitUsage : kExitFailure;
  }
  if (reform_cmd->parsed()) return cmd_reformulate(cfg, err);
  if (run_cmd->parsed()) return cmd_run(cfg, err);
  if (eval_cmd->parsed()) {
    return cmd_evaluate(results, cfg, split_metrics(metrics),
                        baseline.empty() ? std::nullopt : std::optional<std::string>(baseline), out, err);
  }
  return cmd_sweep(cfg, parameter, range, split_metrics(metrics), err);
}

}  // namespace destrank::cli
