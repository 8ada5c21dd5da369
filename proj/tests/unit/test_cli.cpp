#include <doctest.h>

#include <sstream>

#include "cli/commands.hpp"
#include "destrank/bm25.hpp"
#include "destrank/errors.hpp"
#include "destrank/scoring.hpp"
#include "destrank/text.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace destrank;
using testsupport::fixture;
using testsupport::ScopedEnv;
using testsupport::slurp;
using testsupport::spit;
using testsupport::TempDir;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "destrank");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> data_flags(const TempDir& dir) {
  return {"--corpus", fixture("corpus.jsonl"), "--queries", fixture("queries.jsonl"),
          "--qrels", fixture("qrels.jsonl"), "--out", dir.path().string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// The LLM must never be reachable unless a test starts a mock.
struct NoLlm {
  ScopedEnv key{"DESTRANK_LLM_API_KEY", std::nullopt};
  ScopedEnv url{"DESTRANK_LLM_BASE_URL", std::nullopt};
  ScopedEnv model{"DESTRANK_LLM_MODEL", std::nullopt};
};

std::string copy_cache(const TempDir& dir) {
  const auto path = dir.file("cache.jsonl");
  spit(path, slurp(fixture("cache.jsonl")));
  return path;
}

}  // namespace

TEST_CASE("import chunks a raw page dump") {
  TempDir dir;
  auto r = run_cli({"import", fixture("raw_pages.jsonl"), "--out", dir.file("corpus.jsonl")});
  REQUIRE(r.code == 0);
  const auto corpus = load_corpus(dir.file("corpus.jsonl"));
  CHECK(corpus.size() == 5);
  CHECK(corpus.find("queenstown-new-zealand") != nullptr);

  std::filesystem::create_directories(dir.path() / "pages");
  spit(dir.file("pages/Granite_Peak.txt"), slurp(fixture("wikivoyage_page.txt")));
  r = run_cli({"import", dir.file("pages"), "--out", dir.file("dir_corpus.jsonl")});
  REQUIRE(r.code == 0);
  const auto from_dir = load_corpus(dir.file("dir_corpus.jsonl"));
  REQUIRE(from_dir.size() == 1);
  CHECK(from_dir.destinations()[0].name == "Granite Peak");
  CHECK(from_dir.destinations()[0].paragraphs.size() == 5);

  r = run_cli({"import", dir.file("missing.jsonl"), "--out", dir.file("x.jsonl")});
  CHECK(r.code == 2);
  CHECK(r.err.find("not found") != std::string::npos);
  r = run_cli({"import", fixture("raw_pages.jsonl")});
  CHECK(r.code == 2);
}

TEST_CASE("noqr reformulation needs no LLM") {
  NoLlm guard;
  TempDir dir;
  const auto r = run_cli(concat({"reformulate", "--method", "noqr"}, data_flags(dir)));
  REQUIRE(r.code == 0);
  const auto rqs = load_reformulated(dir.file("reformulated.jsonl"));
  REQUIRE(rqs.size() == 2);
  CHECK(rqs[0].method == ReformMethod::NoQR);
  CHECK(rqs[0].original == "ocean beach holidays");
}

TEST_CASE("eqr from a warm cache is reproducible") {
  NoLlm guard;
  TempDir dir;
  const auto cache = copy_cache(dir);
  const auto args = concat({"reformulate", "--method", "eqr", "--k", "3", "--cache", cache, "--cache-only"},
                           data_flags(dir));
  REQUIRE(run_cli(args).code == 0);
  const auto first = slurp(dir.file("reformulated.jsonl"));
  REQUIRE(run_cli(args).code == 0);
  CHECK(slurp(dir.file("reformulated.jsonl")) == first);
  CHECK(slurp(cache) == slurp(fixture("cache.jsonl")));

  const auto rqs = load_reformulated(dir.file("reformulated.jsonl"));
  REQUIRE(rqs.size() == 2);
  CHECK(rqs[0].segments.size() == 3);
  CHECK(rqs[0].segments[0].title == "Beach Resorts");
  CHECK(rqs[1].segments[0].title == "Alpine Trails");
}

TEST_CASE("eqr with a cold cache and no key reports every missing digest") {
  NoLlm guard;
  TempDir dir;
  const auto cache = copy_cache(dir);
  const auto r = run_cli(concat({"reformulate", "--method", "eqr", "--k", "7", "--cache", cache}, data_flags(dir)));
  CHECK(r.code == 1);
  CHECK(r.err.find("2 request(s) not in cache") != std::string::npos);
  CHECK(r.err.find("q1 ") != std::string::npos);
  CHECK(r.err.find("q2 ") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.file("reformulated.jsonl")));
}

TEST_CASE("sparse run matches the oracle ranking") {
  NoLlm guard;
  TempDir dir;
  const auto r = run_cli(concat({"run", "--method", "noqr", "--retriever", "sparse-bm25", "--top-n", "2"},
                                data_flags(dir)));
  REQUIRE(r.code == 0);
  const auto records = load_results(dir.file("results.jsonl"));
  REQUIRE(records.size() == 2);

  const auto corpus = load_corpus(fixture("corpus.jsonl"));
  oracle::Docs docs;
  for (const auto& d : corpus.destinations()) {
    for (const auto& p : d.paragraphs) docs.push_back(sparse::tokenize(p.text));
  }
  const oracle::Bm25 bm25(docs);
  const std::map<std::string, std::string> queries = {{"q1", "ocean beach holidays"},
                                                      {"q2", "mountain hiking and climbing adventures"}};
  for (const auto& rec : records) {
    CHECK(rec.method == "noqr");
    CHECK(rec.retriever == "sparse-bm25");
    CHECK(rec.top_n == 2);
    const auto q = sparse::tokenize(queries.at(rec.qid));
    std::vector<std::pair<std::string, std::vector<double>>> per_dest;
    std::size_t flat = 0;
    for (const auto& d : corpus.destinations()) {
      std::vector<double> s;
      for (std::size_t i = 0; i < d.paragraphs.size(); ++i) s.push_back(bm25.score(q, flat++));
      per_dest.emplace_back(d.id, s);
    }
    const auto expected = oracle::rank(per_dest, 2);
    REQUIRE(rec.ranking.entries.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(rec.ranking.entries[i].dest_id == expected[i].first);
      // results.jsonl keeps 9 significant digits
      CHECK(rec.ranking.entries[i].score == doctest::Approx(expected[i].second).epsilon(1e-8));
    }
  }
  CHECK(records[0].ranking.entries[0].dest_id == "d3");
}

TEST_CASE("runs are byte-identical") {
  NoLlm guard;
  TempDir a, b;
  const std::vector<std::string> base = {"run", "--method", "q2e", "--cache", fixture("cache.jsonl"), "--cache-only"};
  REQUIRE(run_cli(concat(base, data_flags(a))).code == 0);
  REQUIRE(run_cli(concat(base, data_flags(b))).code == 0);
  CHECK(slurp(a.file("results.jsonl")) == slurp(b.file("results.jsonl")));
  CHECK_FALSE(slurp(a.file("results.jsonl")).empty());
}

TEST_CASE("dense runs need embeddings") {
  NoLlm guard;
  TempDir dir;
  auto r = run_cli(concat({"run", "--retriever", "dense-tasb"}, data_flags(dir)));
  CHECK(r.code == 1);
  CHECK(r.err.find("NotPrecomputed") != std::string::npos);

  r = run_cli(concat({"run", "--retriever", "dense-tasb", "--embeddings", fixture("embeddings_tasb.jsonl"),
                      "--query-embeddings", "dense-tasb=" + fixture("query_embeddings_tasb.jsonl")},
                     data_flags(dir)));
  REQUIRE(r.code == 0);
  const auto records = load_results(dir.file("results.jsonl"));
  REQUIRE(records.size() == 2);
  CHECK(records[0].retriever == "dense-tasb");
  CHECK(records[0].top_n == 31);
  CHECK(records[0].ranking.entries.size() == 5);

  r = run_cli(concat({"run", "--retriever", "dense-tasb", "--embeddings", dir.file("nope.jsonl")}, data_flags(dir)));
  CHECK(r.code == 2);
}

TEST_CASE("dense run against an embedding service") {
  NoLlm guard;
  TempDir dir;
  testsupport::MockEmbedServer server(16);
  const auto corpus = load_corpus(fixture("corpus.jsonl"));
  std::string store = R"({"model":"minilm","dim":16})" "\n";
  for (const auto& d : corpus.destinations()) {
    for (std::size_t i = 0; i < d.paragraphs.size(); ++i) {
      store += nlohmann::json{{"key", d.id + "#" + std::to_string(i)},
                              {"vector", server.vector_for(d.paragraphs[i].text)}}.dump() + "\n";
    }
  }
  spit(dir.file("emb.jsonl"), store);

  const auto r = run_cli(concat({"run", "--retriever", "dense-minilm", "--embeddings", dir.file("emb.jsonl"),
                                 "--embed-url", server.url()},
                                data_flags(dir)));
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(server.calls() >= 1);
  CHECK(server.last_model() == "minilm");
  const auto records = load_results(dir.file("results.jsonl"));
  REQUIRE(records.size() == 2);
  CHECK(records[0].top_n == 18);

  auto cosine = [](const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += double(a[i]) * b[i];
      na += double(a[i]) * a[i];
      nb += double(b[i]) * b[i];
    }
    return dot / std::sqrt(na * nb);
  };
  const std::map<std::string, std::string> queries = {{"q1", "ocean beach holidays"},
                                                      {"q2", "mountain hiking and climbing adventures"}};
  for (const auto& rec : records) {
    const auto q = server.vector_for(queries.at(rec.qid));
    std::vector<std::pair<std::string, std::vector<double>>> per_dest;
    for (const auto& d : corpus.destinations()) {
      std::vector<double> s;
      for (const auto& p : d.paragraphs) s.push_back(cosine(q, server.vector_for(p.text)));
      per_dest.emplace_back(d.id, s);
    }
    const auto expected = oracle::rank(per_dest, 18);
    REQUIRE(rec.ranking.entries.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(rec.ranking.entries[i].dest_id == expected[i].first);
      CHECK(rec.ranking.entries[i].score == doctest::Approx(expected[i].second).epsilon(1e-6));
    }
  }
}

TEST_CASE("evaluate") {
  NoLlm guard;
  TempDir dir;
  REQUIRE(run_cli(concat({"run"}, data_flags(dir))).code == 0);
  const auto results = dir.file("results.jsonl");

  auto r = run_cli(concat({"evaluate", "--results", results, "--metrics", ""}, data_flags(dir)));
  CHECK(r.code == 2);
  r = run_cli(concat({"evaluate", "--results", results, "--metrics", "ndcg@5"}, data_flags(dir)));
  CHECK(r.code == 2);

  r = run_cli(concat({"evaluate", "--results", results, "--baseline", results}, data_flags(dir)));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("| QR Method |") != std::string::npos);
  CHECK(r.out.find("No QR") != std::string::npos);
  CHECK(r.err.find("ZeroVariance") != std::string::npos);
  CHECK(slurp(dir.file("report.md")) == r.out);
  const auto csv = slurp(dir.file("report.csv"));
  CHECK(csv.rfind("method,MAP@30,MAP@50,Recall@30,Recall@50,R-Precision,p(MAP@30)", 0) == 0);
  CHECK(csv.find('*') == std::string::npos);
}

TEST_CASE("sweep over top_n") {
  NoLlm guard;
  TempDir dir;
  auto r = run_cli(concat({"sweep", "--parameter", "top_n", "--range", "1:50"}, data_flags(dir)));
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir.file("sweep.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  CHECK(csv.rfind("top_n,MAP@30", 0) == 0);
  // every destination has 4 paragraphs, so n >= 4 gives one ranking
  const auto lines = text::split_lines(csv);
  CHECK(lines[4].substr(lines[4].find(',')) == lines[50].substr(lines[50].find(',')));

  r = run_cli(concat({"sweep", "--parameter", "depth", "--range", "1:5"}, data_flags(dir)));
  CHECK(r.code == 2);
  r = run_cli(concat({"sweep", "--parameter", "top_n", "--range", "5:1"}, data_flags(dir)));
  CHECK(r.code == 2);
  r = run_cli(concat({"sweep", "--parameter", "top_n", "--range", "0:3"}, data_flags(dir)));
  CHECK(r.code != 0);
}

TEST_CASE("sweep over k_subtopics warms the cache then replays it") {
  NoLlm guard;
  TempDir dir;
  const auto cache = dir.file("cache.jsonl");
  const std::vector<std::string> args = concat({"sweep", "--parameter", "k_subtopics", "--range", "5:20",
                                                "--cache", cache},
                                               data_flags(dir));
  {
    testsupport::MockLlmServer server;
    ScopedEnv key("DESTRANK_LLM_API_KEY", "sk-test");
    ScopedEnv url("DESTRANK_LLM_BASE_URL", server.url());
    const auto r = run_cli(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(server.calls() == 32);
  }
  const auto first = slurp(dir.file("sweep.csv"));
  CHECK(std::count(first.begin(), first.end(), '\n') == 17);
  CHECK(first.rfind("k_subtopics,", 0) == 0);

  auto replay = args;
  replay.push_back("--cache-only");
  const auto r = run_cli(replay);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(slurp(dir.file("sweep.csv")) == first);
  CHECK(llm::cache_stats(cache).entries == 32);
}

TEST_CASE("config file with flag overrides") {
  NoLlm guard;
  TempDir dir;
  nlohmann::json cfg = {{"corpus", fixture("corpus.jsonl")}, {"queries", fixture("queries.jsonl")},
                        {"qrels", fixture("qrels.jsonl")}, {"method", "noqr"},
                        {"retriever", "sparse-bm25"}, {"top_n", 3}, {"output_dir", dir.file("from_config")}};
  spit(dir.file("cfg.json"), cfg.dump());
  auto r = run_cli({"run", "--config", dir.file("cfg.json")});
  REQUIRE(r.code == 0);
  CHECK(load_results(dir.file("from_config/results.jsonl"))[0].top_n == 3);

  r = run_cli({"run", "--config", dir.file("cfg.json"), "--top-n", "7", "--out", dir.file("flags")});
  REQUIRE(r.code == 0);
  CHECK(load_results(dir.file("flags/results.jsonl"))[0].top_n == 7);

  cfg["colour"] = "blue";
  spit(dir.file("bad.json"), cfg.dump());
  CHECK(run_cli({"run", "--config", dir.file("bad.json")}).code == 2);

  cli::RunConfig parsed;
  cli::apply_config_json(parsed, R"({"embeddings": {"dense-tasb": "a.jsonl", "dense-minilm": "b.jsonl"},
                                     "k": 9, "few_shot": false, "cache_only": true})");
  CHECK(parsed.embeddings.at("dense-tasb") == "a.jsonl");
  CHECK(parsed.embeddings.at("dense-minilm") == "b.jsonl");
  CHECK(parsed.k_subtopics == 9);
  CHECK_FALSE(parsed.prompt_options.few_shot);
  CHECK(parsed.cache_only);
  CHECK(parsed.effective_top_n() == 13);
}

TEST_CASE("cache-stats") {
  auto r = run_cli({"cache-stats", fixture("cache.jsonl")});
  REQUIRE(r.code == 0);
  CHECK(r.out == "entries: 5\nmodels: gpt-4o\n");
}

TEST_CASE("usage errors") {
  NoLlm guard;
  TempDir dir;
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli(concat({"run", "--method", "hyde"}, data_flags(dir))).code == 2);
  CHECK(run_cli(concat({"run", "--top-n", "0"}, data_flags(dir))).code == 2);
  CHECK(run_cli({"run", "--out", dir.path().string()}).code == 2);
  CHECK(run_cli(concat({"run", "--retriever", "splade"}, data_flags(dir))).code == 2);
}
