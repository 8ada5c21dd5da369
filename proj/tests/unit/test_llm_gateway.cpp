#include <doctest.h>

#include <thread>

#include "destrank/errors.hpp"
#include "destrank/llm_gateway.hpp"
#include "test_support.hpp"

using namespace destrank;
using namespace destrank::llm;
using testsupport::error_code;
using testsupport::fixture;

namespace {

ChatRequest winter_request() {
  ChatRequest r;
  r.user_prompt = "Cities for a winter holiday";
  return r;
}

GatewayConfig online(const std::string& cache, const std::string& url) {
  GatewayConfig cfg;
  cfg.cache_path = cache;
  cfg.base_url = url;
  cfg.api_key = "test-key";
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(5);
  return cfg;
}

}  // namespace

TEST_CASE("canonical json has sorted keys and no whitespace") {
  auto r = winter_request();
  CHECK(canonical_json(r) ==
        R"({"max_tokens":1024,"model":"gpt-4o","temperature":0.0,"user_prompt":"Cities for a winter holiday"})");
  r.system_prompt = "You are helpful.";
  CHECK(canonical_json(r).find(R"("system_prompt":"You are helpful.","temperature")") != std::string::npos);
}

TEST_CASE("cache keys match an independent sha-256 of the canonical form") {
  // digests computed with python hashlib over json.dumps(sort_keys=True, separators=(',',':'))
  auto r = winter_request();
  CHECK(cache_key(r) == "347033dbcc471178bd262ddd3eb63314a0c00a892d6da4c489293a8bf670dc9d");
  r.system_prompt = "You are helpful.";
  CHECK(cache_key(r) == "3c79cb93b7aeb08808a5c5d2a518c78e9552d1b7954b54a685c6152cd100d06b");
  CHECK(cache_key(r).size() == 64);
}

TEST_CASE("cache_stats") {
  testsupport::TempDir tmp;
  testsupport::spit(tmp.path() / "empty.jsonl", "");
  auto empty = cache_stats(tmp.file("empty.jsonl"));
  CHECK(empty.entries == 0);
  CHECK(empty.models.empty());
  CHECK(cache_stats(tmp.file("missing.jsonl")).entries == 0);

  const auto stats = cache_stats(fixture("cache.jsonl"));
  CHECK(stats.entries == 5);
  CHECK(stats.models == std::set<std::string>{"gpt-4o"});

  auto text = testsupport::slurp(fixture("cache.jsonl"));
  text.resize(text.size() - 40);
  testsupport::spit(tmp.path() / "truncated.jsonl", text);
  CHECK(error_code([&] { cache_stats(tmp.file("truncated.jsonl")); }) == Errc::MalformedCache);

  auto entry = nlohmann::json::parse(text.substr(0, text.find('\n')));
  entry["response_text"] = "changed";
  entry["request"]["user_prompt"] = "changed";
  testsupport::spit(tmp.path() / "tampered.jsonl", entry.dump() + "\n");
  CHECK(error_code([&] { cache_stats(tmp.file("tampered.jsonl")); }) == Errc::MalformedCache);
}

TEST_CASE("replay from cache makes no network calls") {
  const auto entries = read_cache(fixture("cache.jsonl"));
  REQUIRE(entries.size() == 5);
  GatewayConfig cfg;
  cfg.cache_path = fixture("cache.jsonl");
  cfg.cache_only = true;
  LlmGateway gw(cfg);
  CHECK(gw.offline());
  for (const auto& e : entries) {
    const auto res = gw.complete(e.request);
    CHECK(res.cached);
    CHECK(res.text == e.response_text);
  }
  CHECK(gw.network_calls() == 0);
}

TEST_CASE("cache-only miss names the digest") {
  GatewayConfig cfg;
  cfg.cache_path = fixture("cache.jsonl");
  cfg.cache_only = true;
  LlmGateway gw(cfg);
  auto r = winter_request();
  r.user_prompt = "a prompt nobody has asked before";
  try {
    gw.complete(r);
    FAIL("expected CacheMiss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CacheMiss);
    CHECK(std::string(e.what()).find(cache_key(r)) != std::string::npos);
  }
}

TEST_CASE("missing api key means cache-only") {
  GatewayConfig cfg;
  LlmGateway gw(cfg);
  CHECK(gw.offline());
  CHECK(error_code([&] { gw.complete(winter_request()); }) == Errc::CacheMiss);
}

TEST_CASE("config_from_env") {
  testsupport::ScopedEnv key("DESTRANK_LLM_API_KEY", "sk-abc");
  testsupport::ScopedEnv url("DESTRANK_LLM_BASE_URL", "http://localhost:9/prefix");
  testsupport::ScopedEnv model("DESTRANK_LLM_MODEL", std::nullopt);
  const auto cfg = config_from_env("c.jsonl", false);
  CHECK(cfg.api_key == "sk-abc");
  CHECK(cfg.base_url == "http://localhost:9/prefix");
  CHECK(cfg.model == "gpt-4o");
  CHECK(cfg.cache_path == "c.jsonl");
  testsupport::ScopedEnv model2("DESTRANK_LLM_MODEL", "other-model");
  CHECK(config_from_env("", true).model == "other-model");
  CHECK(config_from_env("", true).cache_only);
}

TEST_CASE("online call appends to the cache and replays") {
  testsupport::MockLlmServer server([](const nlohmann::json& body) {
    CHECK(body["model"] == "gpt-4o");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["max_tokens"] == 1024);
    return std::pair<int, std::string>{200, "  raw answer \n"};
  });
  testsupport::TempDir tmp;
  const auto cache = tmp.file("cache.jsonl");
  {
    LlmGateway gw(online(cache, server.url()));
    const auto first = gw.complete(winter_request());
    CHECK_FALSE(first.cached);
    CHECK(first.text == "  raw answer \n");
    const auto second = gw.complete(winter_request());
    CHECK(second.cached);
    CHECK(second.text == first.text);
    CHECK(gw.network_calls() == 1);
  }
  CHECK(server.calls() == 1);
  CHECK(server.last_auth() == "Bearer test-key");

  const auto entries = read_cache(cache);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].key == cache_key(winter_request()));
  CHECK(entries[0].request == winter_request());
  CHECK(entries[0].timestamp.size() == 20);
  CHECK(entries[0].timestamp.back() == 'Z');

  GatewayConfig replay;
  replay.cache_path = cache;
  replay.cache_only = true;
  LlmGateway gw(replay);
  CHECK(gw.complete(winter_request()).text == "  raw answer \n");
}

TEST_CASE("base url path prefix is kept") {
  httplib::Server srv;
  int hits = 0;
  srv.Post("/api/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  LlmGateway gw(online("", "http://127.0.0.1:" + std::to_string(port) + "/api/"));
  CHECK(gw.complete(winter_request()).text == "ok");
  srv.stop();
  t.join();
  CHECK(hits == 1);
}

TEST_CASE("last cache entry wins") {
  const auto entries = read_cache(fixture("cache.jsonl"));
  auto e = entries[0];
  e.response_text = "newer answer";
  testsupport::TempDir tmp;
  testsupport::spit(tmp.path() / "c.jsonl", testsupport::slurp(fixture("cache.jsonl")) + serialize_entry(e) + "\n");
  GatewayConfig cfg;
  cfg.cache_path = tmp.file("c.jsonl");
  LlmGateway gw(cfg);
  CHECK(gw.cache_size() == 5);
  CHECK(gw.complete(e.request).text == "newer answer");
}

TEST_CASE("api errors are not retried") {
  testsupport::MockLlmServer server(
      [](const nlohmann::json&) { return std::pair<int, std::string>{429, R"({"error":"rate"})"}; });
  LlmGateway gw(online("", server.url()));
  try {
    gw.complete(winter_request());
    FAIL("expected ApiError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ApiError);
    CHECK(std::string(e.what()).find("429") != std::string::npos);
  }
  CHECK(server.calls() == 1);
}

TEST_CASE("malformed api body is an ApiError") {
  httplib::Server srv;
  srv.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[]})", "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  LlmGateway gw(online("", "http://127.0.0.1:" + std::to_string(port)));
  CHECK(error_code([&] { gw.complete(winter_request()); }) == Errc::ApiError);
  srv.stop();
  t.join();
}

TEST_CASE("network errors retry three times then fail") {
  // nothing listens on port 1, so every connect is refused
  LlmGateway gw(online("", "http://127.0.0.1:1"));
  CHECK(error_code([&] { gw.complete(winter_request()); }) == Errc::NetworkError);
  CHECK(gw.network_calls() == 4);
}

TEST_CASE("concurrent completes share one cache file") {
  testsupport::MockLlmServer server;
  testsupport::TempDir tmp;
  const auto cache = tmp.file("cache.jsonl");
  {
    LlmGateway gw(online(cache, server.url()));
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
      threads.emplace_back([&gw, i] {
        ChatRequest r;
        r.user_prompt = "prompt " + std::to_string(i);
        gw.complete(r);
      });
    }
    for (auto& t : threads) t.join();
  }
  CHECK(read_cache(cache).size() == 8);
}
