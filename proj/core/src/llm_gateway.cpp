#include "destrank/llm_gateway.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "destrank/errors.hpp"
#include "destrank/text.hpp"

namespace destrank::llm {

using nlohmann::json;

namespace {

json to_json(const ChatRequest& r) {
  // nlohmann::json objects are std::map backed, so keys serialize sorted.
  json j = {{"model", r.model},
            {"user_prompt", r.user_prompt},
            {"temperature", r.temperature},
            {"max_tokens", r.max_tokens}};
  if (r.system_prompt) j["system_prompt"] = *r.system_prompt;
  return j;
}

ChatRequest request_from_json(const json& j) {
  ChatRequest r;
  r.model = j.at("model").get<std::string>();
  r.user_prompt = j.at("user_prompt").get<std::string>();
  r.temperature = j.at("temperature").get<double>();
  r.max_tokens = j.at("max_tokens").get<int>();
  if (j.contains("system_prompt") && !j["system_prompt"].is_null()) {
    r.system_prompt = j["system_prompt"].get<std::string>();
  }
  return r;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("EVP_Digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string rfc3339_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : std::move(fallback);
}

// "https://host:port/prefix" -> {"https://host:port", "/prefix"}
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  auto scheme = url.find("://");
  auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

}  // namespace

std::string canonical_json(const ChatRequest& request) { return to_json(request).dump(); }

std::string cache_key(const ChatRequest& request) { return sha256_hex(canonical_json(request)); }

std::string serialize_entry(const CacheEntry& entry) {
  json j = {{"key", entry.key},
            {"request", to_json(entry.request)},
            {"response_text", entry.response_text},
            {"timestamp", entry.timestamp}};
  return j.dump();
}

std::vector<CacheEntry> read_cache(const std::string& path) {
  std::vector<CacheEntry> entries;
  if (!std::filesystem::exists(path)) return entries;
  const std::string doc = text::read_file(path);
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(doc)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      CacheEntry e;
      e.key = j.at("key").get<std::string>();
      e.request = request_from_json(j.at("request"));
      e.response_text = j.at("response_text").get<std::string>();
      e.timestamp = j.value("timestamp", "");
      if (e.key != cache_key(e.request)) {
        throw Error(Errc::MalformedCache,
                    "line " + std::to_string(line_no) + ": key does not match request digest");
      }
      entries.push_back(std::move(e));
    } catch (const json::exception&) {
      throw Error(Errc::MalformedCache, "line " + std::to_string(line_no));
    }
  }
  return entries;
}

CacheStats cache_stats(const std::string& path) {
  CacheStats stats;
  for (const auto& e : read_cache(path)) {
    ++stats.entries;
    stats.models.insert(e.request.model);
  }
  return stats;
}

GatewayConfig config_from_env(std::string cache_path, bool cache_only) {
  GatewayConfig cfg;
  cfg.cache_path = std::move(cache_path);
  cfg.cache_only = cache_only;
  cfg.api_key = env_or("DESTRANK_LLM_API_KEY", "");
  cfg.base_url = env_or("DESTRANK_LLM_BASE_URL", cfg.base_url);
  cfg.model = env_or("DESTRANK_LLM_MODEL", kDefaultModel);
  return cfg;
}

LlmGateway::LlmGateway(GatewayConfig config) : config_(std::move(config)) {
  if (config_.cache_path.empty()) return;
  for (auto& e : read_cache(config_.cache_path)) {
    responses_[e.key] = std::move(e.response_text);
  }
  if (!offline()) {
    writer_.open(config_.cache_path, std::ios::binary | std::ios::app);
    if (!writer_) throw Error(Errc::Io, "cannot append to " + config_.cache_path);
  }
}

std::size_t LlmGateway::network_calls() const {
  std::lock_guard lock(mutex_);
  return network_calls_;
}

std::size_t LlmGateway::cache_size() const {
  std::lock_guard lock(mutex_);
  return responses_.size();
}

ChatResponse LlmGateway::complete(const ChatRequest& request) {
  const std::string key = cache_key(request);
  {
    std::lock_guard lock(mutex_);
    if (auto it = responses_.find(key); it != responses_.end()) return {it->second, true};
  }
  if (offline()) throw Error(Errc::CacheMiss, key);

  std::string text = post_chat(request);
  append(CacheEntry{key, request, text, rfc3339_now()});
  return {std::move(text), false};
}

std::string LlmGateway::post_chat(const ChatRequest& request) {
  json messages = json::array();
  if (request.system_prompt) {
    messages.push_back({{"role", "system"}, {"content", *request.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  const json body = {{"model", request.model},
                     {"messages", std::move(messages)},
                     {"temperature", request.temperature},
                     {"max_tokens", request.max_tokens}};

  const auto [host, prefix] = split_base_url(config_.base_url);
  httplib::Client client(host);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(config_.timeout);
  client.set_bearer_token_auth(config_.api_key);

  auto delay = config_.backoff_base;
  for (int attempt = 0;; ++attempt) {
    {
      std::lock_guard lock(mutex_);
      ++network_calls_;
    }
    auto res = client.Post(prefix + "/v1/chat/completions", body.dump(), "application/json");
    if (!res) {
      if (attempt >= config_.max_retries) {
        throw Error(Errc::NetworkError, httplib::to_string(res.error()) + " after " +
                                            std::to_string(attempt + 1) + " attempts");
      }
      std::this_thread::sleep_for(delay);
      delay *= 2;
      continue;
    }
    if (res->status != 200) {
      throw Error(Errc::ApiError, "status " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      return json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(Errc::ApiError, std::string("unexpected response body: ") + e.what());
    }
  }
}

void LlmGateway::append(CacheEntry entry) {
  std::lock_guard lock(mutex_);
  if (writer_.is_open()) {
    writer_ << serialize_entry(entry) << '\n';
    writer_.flush();
  }
  responses_[entry.key] = std::move(entry.response_text);
}

}  // namespace destrank::llm
