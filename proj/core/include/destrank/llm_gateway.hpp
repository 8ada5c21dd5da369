#pragma once

#include <chrono>
#include <cstddef>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace destrank::llm {

inline constexpr const char* kDefaultModel = "gpt-4o";
inline constexpr int kDefaultMaxTokens = 1024;

struct ChatRequest {
  std::string model = kDefaultModel;
  std::optional<std::string> system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = kDefaultMaxTokens;

  bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
  std::string text;  // raw assistant message, untrimmed
  bool cached = false;
};

struct CacheEntry {
  std::string key;
  ChatRequest request;
  std::string response_text;
  std::string timestamp;
};

/// Compact JSON with lexicographically sorted keys and no whitespace. An absent
/// system prompt is omitted, not serialized as null.
std::string canonical_json(const ChatRequest& request);

/// Lowercase hex SHA-256 of canonical_json(request).
std::string cache_key(const ChatRequest& request);

struct GatewayConfig {
  std::string cache_path;
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  std::string model = kDefaultModel;
  /// Never touch the network; unseen requests raise CacheMiss.
  bool cache_only = false;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::seconds timeout{120};
};

/// Reads DESTRANK_LLM_API_KEY, DESTRANK_LLM_BASE_URL and DESTRANK_LLM_MODEL.
GatewayConfig config_from_env(std::string cache_path, bool cache_only);

/// Chat-completion client with an append-only JSONL record/replay cache.
///
/// The cache file is loaded once at construction. Lookups consult that
/// snapshot plus every entry appended by this process; on duplicate keys the
/// last entry wins. complete() is safe to call from several threads: network
/// calls run unlocked, appends are serialized.
///
/// Without an API key the gateway behaves as if cache_only were set.
class LlmGateway {
 public:
  explicit LlmGateway(GatewayConfig config);

  LlmGateway(const LlmGateway&) = delete;
  LlmGateway& operator=(const LlmGateway&) = delete;

  /// Throws Error{CacheMiss} (message names the digest) when offline and
  /// unseen, Error{NetworkError} after the retries are exhausted, and
  /// Error{ApiError} for a non-200 reply.
  ChatResponse complete(const ChatRequest& request);

  bool offline() const noexcept { return config_.cache_only || config_.api_key.empty(); }
  const std::string& model() const noexcept { return config_.model; }
  std::size_t network_calls() const;
  std::size_t cache_size() const;

 private:
  std::string post_chat(const ChatRequest& request);
  void append(CacheEntry entry);

  GatewayConfig config_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> responses_;
  std::ofstream writer_;
  std::size_t network_calls_ = 0;
};

/// Parses a cache file; a missing file is an empty cache. Throws
/// Error{MalformedCache} naming the first bad line.
std::vector<CacheEntry> read_cache(const std::string& path);

struct CacheStats {
  std::size_t entries = 0;
  std::set<std::string> models;
};
CacheStats cache_stats(const std::string& path);

std::string serialize_entry(const CacheEntry& entry);

}  // namespace destrank::llm
