#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "destrank/errors.hpp"
#include "destrank/report.hpp"
#include "destrank/text.hpp"

namespace destrank::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::Usage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

void require_file(const std::string& path, std::string_view what) {
  if (path.empty()) throw Error(Errc::Usage, "no " + std::string(what) + " path configured");
  if (!fs::is_regular_file(path)) {
    throw Error(Errc::Usage, std::string(what) + " not found: " + path);
  }
}

void require_optional_file(const std::string& path, std::string_view what) {
  if (!path.empty()) require_file(path, what);
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << content;
}

std::string lookup_path(const std::map<std::string, std::string>& paths, Retriever r) {
  auto it = paths.find(std::string(retriever_name(r)));
  if (it != paths.end()) return it->second;
  it = paths.find("");
  return it != paths.end() ? it->second : std::string{};
}

void validate_common(const RunConfig& cfg) {
  require_file(cfg.corpus, "corpus");
  require_file(cfg.queries, "queries");
  require_file(cfg.qrels, "qrels");
  require_optional_file(cfg.reformulated, "reformulated");
  if (is_dense(cfg.retriever)) {
    require_optional_file(lookup_path(cfg.embeddings, cfg.retriever), "embeddings");
    require_optional_file(lookup_path(cfg.query_embeddings, cfg.retriever), "query embeddings");
  }
  if (cfg.top_n && *cfg.top_n < 1) throw Error(Errc::Usage, "top_n must be >= 1");
  if (cfg.k_subtopics < 1) throw Error(Errc::Usage, "k must be >= 1");
}

struct Inputs {
  Corpus corpus;
  Dataset dataset;
};

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in{load_corpus(cfg.corpus), {}};
  in.dataset = load_dataset(cfg.queries, cfg.qrels, &in.corpus);
  return in;
}

std::string digest_of(const Error& e) {
  std::string what = e.what();
  auto pos = what.find(": ");
  return pos == std::string::npos ? what : what.substr(pos + 2);
}

}  // namespace

int RunConfig::effective_top_n() const { return top_n ? *top_n : default_top_n(retriever); }

void apply_config_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::Usage, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::Usage, "config must be a JSON object");
  auto path_map = [](const json& v) {
    std::map<std::string, std::string> out;
    if (v.is_string()) {
      out[""] = v.get<std::string>();
    } else {
      for (const auto& [k, p] : v.items()) out[std::string(retriever_name(parse_retriever(k)))] = p.get<std::string>();
    }
    return out;
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "corpus" || key == "corpus_path") cfg.corpus = v.get<std::string>();
      else if (key == "queries" || key == "queries_path") cfg.queries = v.get<std::string>();
      else if (key == "qrels" || key == "qrels_path") cfg.qrels = v.get<std::string>();
      else if (key == "cache" || key == "cache_path") cfg.cache = v.get<std::string>();
      else if (key == "reformulated") cfg.reformulated = v.get<std::string>();
      else if (key == "embeddings" || key == "embeddings_path") cfg.embeddings = path_map(v);
      else if (key == "query_embeddings") cfg.query_embeddings = path_map(v);
      else if (key == "embed_url") cfg.embed_url = v.get<std::string>();
      else if (key == "method") cfg.method = parse_method(v.get<std::string>());
      else if (key == "retriever") cfg.retriever = parse_retriever(v.get<std::string>());
      else if (key == "top_n") cfg.top_n = v.is_null() ? std::nullopt : std::optional<int>(v.get<int>());
      else if (key == "k_subtopics" || key == "k") cfg.k_subtopics = v.get<int>();
      else if (key == "few_shot") cfg.prompt_options.few_shot = v.get<bool>();
      else if (key == "destination_list") cfg.prompt_options.destination_list = v.get<bool>();
      else if (key == "cache_only") cfg.cache_only = v.get<bool>();
      else if (key == "output_dir" || key == "out") cfg.output_dir = v.get<std::string>();
      else throw Error(Errc::Usage, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Usage, std::string("bad config value: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  require_file(path, "config");
  RunConfig cfg;
  apply_config_json(cfg, text::read_file(path));
  return cfg;
}

std::vector<ReformulatedQuery> obtain_reformulations(const RunConfig& cfg, const Corpus& corpus,
                                                     const Dataset& dataset, ReformMethod method,
                                                     int k) {
  std::map<std::string, ReformulatedQuery> known;
  if (!cfg.reformulated.empty()) {
    for (auto& rq : load_reformulated(cfg.reformulated)) {
      if (rq.method != method) continue;
      if (method == ReformMethod::EQR && rq.k && *rq.k != k) continue;
      known[rq.qid] = std::move(rq);
    }
  }

  std::unique_ptr<llm::LlmGateway> gateway;
  std::unique_ptr<Reformulator> reformulator;
  std::vector<std::string> missing;
  std::vector<ReformulatedQuery> out;
  out.reserve(dataset.queries.size());
  for (const auto& q : dataset.queries) {
    if (auto it = known.find(q.qid); it != known.end()) {
      out.push_back(it->second);
      continue;
    }
    if (method != ReformMethod::NoQR && !reformulator) {
      gateway = std::make_unique<llm::LlmGateway>(llm::config_from_env(cfg.cache, cfg.cache_only));
      reformulator = std::make_unique<Reformulator>(*gateway, corpus.names());
    }
    if (method == ReformMethod::NoQR) {
      ReformulatedQuery rq;
      rq.qid = q.qid;
      rq.original = q.text;
      rq.options = cfg.prompt_options;
      out.push_back(std::move(rq));
      continue;
    }
    try {
      out.push_back(reformulator->reformulate(q, method, k, cfg.prompt_options));
    } catch (const Error& e) {
      if (e.code() != Errc::CacheMiss) throw;
      missing.push_back(q.qid + " " + digest_of(e));
    }
  }
  if (!missing.empty()) {
    std::string detail = std::to_string(missing.size()) + " request(s) not in cache:";
    for (const auto& m : missing) detail += "\n  " + m;
    throw Error(Errc::CacheMiss, detail);
  }
  return out;
}

std::unique_ptr<ScoringBackend> make_backend(const RunConfig& cfg, const Corpus& corpus,
                                             const std::vector<ReformulatedQuery>& reformulations) {
  if (!is_dense(cfg.retriever)) return std::make_unique<SparseBackend>(corpus);

  const auto para_path = lookup_path(cfg.embeddings, cfg.retriever);
  if (para_path.empty()) {
    throw Error(Errc::NotPrecomputed,
                "no paragraph embeddings configured for " + std::string(retriever_name(cfg.retriever)));
  }
  auto paragraphs = std::make_shared<const dense::EmbeddingStore>(dense::load_embeddings(para_path));

  std::shared_ptr<const dense::EmbeddingProvider> provider;
  if (!cfg.embed_url.empty()) {
    provider = std::make_shared<dense::HttpEmbeddingProvider>(cfg.embed_url, paragraphs->model_id(),
                                                              paragraphs->dim());
  } else {
    const auto query_path = lookup_path(cfg.query_embeddings, cfg.retriever);
    auto queries = query_path.empty()
                       ? paragraphs
                       : std::make_shared<const dense::EmbeddingStore>(dense::load_embeddings(query_path));
    auto file_provider = std::make_shared<dense::FileEmbeddingProvider>(queries);
    for (const auto& rq : reformulations) {
      file_provider->register_text(render_dense(rq), rq.qid + "#" + std::string(method_name(rq.method)));
    }
    provider = std::move(file_provider);
  }
  return std::make_unique<DenseBackend>(corpus, std::move(paragraphs), std::move(provider));
}

eval::RunRankings rank_all(const std::vector<ReformulatedQuery>& reformulations,
                           const Corpus& corpus, const ScoringBackend& backend, int top_n) {
  eval::RunRankings out;
  ScoringConfig sc;
  sc.top_n = top_n;
  for (const auto& rq : reformulations) out[rq.qid] = rank_destinations(rq, corpus, backend, sc);
  return out;
}

int cmd_import(const std::string& raw_pages_path, const std::string& out_corpus_path,
               std::ostream& err) {
  return guarded(err, [&] {
    if (out_corpus_path.empty()) throw Error(Errc::Usage, "no output corpus path");
    std::vector<Destination> dests;
    if (fs::is_directory(raw_pages_path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(raw_pages_path)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        std::string name = f.stem().string();
        std::replace(name.begin(), name.end(), '_', ' ');
        dests.push_back(make_destination(name, text::read_file(f.string())));
      }
    } else {
      require_file(raw_pages_path, "raw pages");
      std::size_t line_no = 0;
      for (const auto& line : text::split_lines(text::read_file(raw_pages_path))) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
          const json j = json::parse(line);
          std::optional<std::string> id;
          if (j.contains("id")) id = j["id"].get<std::string>();
          dests.push_back(make_destination(j.at("name").get<std::string>(),
                                           j.at("text").get<std::string>(), id));
        } catch (const json::exception&) {
          throw Error(Errc::MalformedLine, raw_pages_path + " line " + std::to_string(line_no));
        }
      }
    }
    for (const auto& d : dests) {
      if (d.paragraphs.empty()) throw Error(Errc::EmptyDocument, d.id);
    }
    if (dests.empty()) throw Error(Errc::InvalidCorpus, "no pages found in " + raw_pages_path);
    const Corpus corpus(std::move(dests));
    write_text(out_corpus_path, serialize_corpus(corpus));
    err << "imported " << corpus.size() << " destinations, " << corpus.total_paragraphs()
        << " paragraphs\n";
    return kExitOk;
  });
}

int cmd_reformulate(const RunConfig& cfg, std::ostream& err) {
  return guarded(err, [&] {
    require_file(cfg.corpus, "corpus");
    require_file(cfg.queries, "queries");
    require_file(cfg.qrels, "qrels");
    const auto in = load_inputs(cfg);
    RunConfig fresh = cfg;
    fresh.reformulated.clear();
    const auto rqs = obtain_reformulations(fresh, in.corpus, in.dataset, cfg.method, cfg.k_subtopics);
    std::string out;
    for (const auto& rq : rqs) out += to_jsonl(rq) + "\n";
    write_text(fs::path(cfg.output_dir) / "reformulated.jsonl", out);
    err << "wrote " << rqs.size() << " reformulations (" << method_name(cfg.method) << ")\n";
    return kExitOk;
  });
}

int cmd_run(const RunConfig& cfg, std::ostream& err) {
  return guarded(err, [&] {
    validate_common(cfg);
    const auto in = load_inputs(cfg);
    const auto rqs = obtain_reformulations(cfg, in.corpus, in.dataset, cfg.method, cfg.k_subtopics);
    const auto backend = make_backend(cfg, in.corpus, rqs);
    const int top_n = cfg.effective_top_n();
    const auto rankings = rank_all(rqs, in.corpus, *backend, top_n);
    std::string out;
    for (const auto& rq : rqs) {
      RunRecord rec{rq.qid, std::string(method_name(rq.method)),
                    std::string(retriever_name(cfg.retriever)), top_n, rankings.at(rq.qid)};
      out += to_jsonl(rec) + "\n";
    }
    write_text(fs::path(cfg.output_dir) / "results.jsonl", out);
    err << "ranked " << in.corpus.size() << " destinations for " << rqs.size() << " queries ("
        << method_name(cfg.method) << ", " << retriever_name(cfg.retriever) << ", n=" << top_n << ")\n";
    return kExitOk;
  });
}

namespace {

struct RunGroup {
  std::string method;
  std::string retriever;
  int top_n = 0;
  eval::RunRankings rankings;
};

std::vector<RunGroup> group_results(const std::vector<RunRecord>& records) {
  std::vector<RunGroup> groups;
  for (const auto& r : records) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const RunGroup& g) {
      return g.method == r.method && g.retriever == r.retriever && g.top_n == r.top_n;
    });
    if (it == groups.end()) {
      groups.push_back(RunGroup{r.method, r.retriever, r.top_n, {}});
      it = std::prev(groups.end());
    }
    it->rankings[r.qid] = r.ranking;
  }
  return groups;
}

std::vector<eval::RunSummary> summarize(const std::vector<RunGroup>& groups, const Dataset& ds,
                                        const std::vector<eval::MetricSpec>& metrics) {
  std::set<std::pair<std::string, int>> setups;
  for (const auto& g : groups) setups.emplace(g.retriever, g.top_n);
  std::vector<eval::RunSummary> out;
  for (const auto& g : groups) {
    std::string label;
    try {
      label = std::string(method_label(parse_method(g.method)));
    } catch (const Error&) {
      label = g.method;
    }
    if (setups.size() > 1) label += " (" + g.retriever + ", n=" + std::to_string(g.top_n) + ")";
    out.push_back({label, eval::evaluate_run(g.rankings, ds, metrics)});
  }
  return out;
}

}  // namespace

int cmd_evaluate(const std::string& results_path, const RunConfig& cfg,
                 const std::vector<std::string>& metric_names,
                 const std::optional<std::string>& baseline_results, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    if (metric_names.empty()) throw Error(Errc::Usage, "metric list is empty");
    std::vector<eval::MetricSpec> metrics;
    for (const auto& m : metric_names) metrics.push_back(eval::parse_metric(m));
    require_file(results_path, "results");
    if (baseline_results) require_file(*baseline_results, "baseline results");
    require_file(cfg.queries, "queries");
    require_file(cfg.qrels, "qrels");

    std::optional<Corpus> corpus;
    if (!cfg.corpus.empty()) {
      require_file(cfg.corpus, "corpus");
      corpus = load_corpus(cfg.corpus);
    }
    const auto ds = load_dataset(cfg.queries, cfg.qrels, corpus ? &*corpus : nullptr);

    auto rows = summarize(group_results(load_results(results_path)), ds, metrics);
    std::vector<eval::RunSummary> baselines;
    if (baseline_results) baselines = summarize(group_results(load_results(*baseline_results)), ds, metrics);
    const auto table = eval::build_report(std::move(rows), baselines, metrics);

    const auto md = eval::render_markdown(table);
    write_text(fs::path(cfg.output_dir) / "report.md", md);
    write_text(fs::path(cfg.output_dir) / "report.csv", eval::render_csv(table));
    out << md;
    for (std::size_t r = 0; r < table.comparisons.size(); ++r) {
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        const auto& c = table.comparisons[r][m];
        if (!c.test) {
          err << "note: " << table.rows[r].label << " vs " << c.baseline_label << " on "
              << metrics[m].label() << ": " << c.note << "\n";
        }
      }
    }
    return kExitOk;
  });
}

int cmd_sweep(const RunConfig& cfg, const std::string& parameter, const std::string& range,
              const std::vector<std::string>& metric_names, std::ostream& err) {
  return guarded(err, [&] {
    if (parameter != "top_n" && parameter != "k_subtopics") {
      throw Error(Errc::Usage, "unknown sweep parameter '" + parameter + "' (top_n or k_subtopics)");
    }
    const auto values = eval::parse_range(range);
    if (metric_names.empty()) throw Error(Errc::Usage, "metric list is empty");
    std::vector<eval::MetricSpec> metrics;
    for (const auto& m : metric_names) metrics.push_back(eval::parse_metric(m));
    validate_common(cfg);
    const auto in = load_inputs(cfg);

    eval::SweepResult result;
    if (parameter == "top_n") {
      const auto rqs = obtain_reformulations(cfg, in.corpus, in.dataset, cfg.method, cfg.k_subtopics);
      const auto backend = make_backend(cfg, in.corpus, rqs);
      std::vector<std::vector<double>> scores;
      scores.reserve(rqs.size());
      for (const auto& rq : rqs) scores.push_back(backend->paragraph_scores(rq));
      result = eval::sweep(parameter, values, [&](int n) {
        eval::RunRankings out;
        for (std::size_t i = 0; i < rqs.size(); ++i) {
          out[rqs[i].qid] = rank_from_scores(rqs[i].qid, in.corpus, scores[i], n);
        }
        return out;
      }, in.dataset, metrics);
    } else {
      std::unique_ptr<ScoringBackend> sparse_backend;
      if (!is_dense(cfg.retriever)) sparse_backend = std::make_unique<SparseBackend>(in.corpus);
      result = eval::sweep(parameter, values, [&](int k) {
        const auto rqs = obtain_reformulations(cfg, in.corpus, in.dataset, ReformMethod::EQR, k);
        std::unique_ptr<ScoringBackend> dense_backend;
        if (!sparse_backend) dense_backend = make_backend(cfg, in.corpus, rqs);
        const auto& backend = sparse_backend ? *sparse_backend : *dense_backend;
        return rank_all(rqs, in.corpus, backend, cfg.effective_top_n());
      }, in.dataset, metrics);
    }
    write_text(fs::path(cfg.output_dir) / "sweep.csv", eval::to_csv(result));
    err << "swept " << parameter << " over " << values.size() << " values\n";
    return kExitOk;
  });
}

int cmd_cache_stats(const std::string& cache_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cache_path.empty()) throw Error(Errc::Usage, "no cache path");
    const auto stats = llm::cache_stats(cache_path);
    out << "entries: " << stats.entries << "\nmodels:";
    for (const auto& m : stats.models) out << " " << m;
    out << "\n";
    return kExitOk;
  });
}

}  // namespace destrank::cli
