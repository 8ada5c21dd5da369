#include "destrank/dense.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include <httplib.h>
#include <json.hpp>

#include "destrank/errors.hpp"
#include "destrank/text.hpp"

namespace destrank::dense {

using nlohmann::json;

namespace {
std::atomic<std::size_t> g_zero_norms{0};

std::pair<std::string, std::string> split_base_url(const std::string& url) {
  auto scheme = url.find("://");
  auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}
}  // namespace

Vector::Vector(std::vector<float> components) : components_(std::move(components)) {
  for (float c : components_) {
    if (!std::isfinite(c)) throw Error(Errc::MalformedLine, "non-finite vector component");
  }
}

double cosine(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) {
    throw Error(Errc::DimMismatch, std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  const auto x = a.components();
  const auto y = b.components();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = y[i];
    dot += xi * yi;
    na += xi * xi;
    nb += yi * yi;
  }
  if (na == 0.0 || nb == 0.0) {
    if (g_zero_norms.fetch_add(1) == 0) {
      std::cerr << "warning: zero-norm vector in cosine, scoring 0\n";
    }
    return 0.0;
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::size_t zero_norm_count() noexcept { return g_zero_norms.load(); }

EmbeddingStore::EmbeddingStore(std::string model_id, std::size_t dim)
    : model_id_(std::move(model_id)), dim_(dim) {
  if (dim_ == 0) throw Error(Errc::MalformedHeader, "dim must be positive");
}

void EmbeddingStore::add(std::string key, Vector v) {
  if (v.dim() != dim_) {
    throw Error(Errc::DimMismatch, key + " has " + std::to_string(v.dim()) + " components, expected " +
                                       std::to_string(dim_));
  }
  if (vectors_.contains(key)) throw Error(Errc::DuplicateKey, key);
  keys_.push_back(key);
  vectors_.emplace(std::move(key), std::move(v));
}

const Vector* EmbeddingStore::find(std::string_view key) const {
  auto it = vectors_.find(std::string(key));
  return it == vectors_.end() ? nullptr : &it->second;
}

const Vector& EmbeddingStore::at(std::string_view key) const {
  if (const auto* v = find(key)) return *v;
  throw Error(Errc::NotPrecomputed, std::string(key));
}

EmbeddingStore parse_embeddings(std::string_view jsonl) {
  const auto lines = text::split_lines(jsonl);
  std::size_t line_no = 0;
  std::optional<EmbeddingStore> store;
  for (const auto& line : lines) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      if (!store) throw Error(Errc::MalformedHeader, "line " + std::to_string(line_no));
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no));
    }
    if (!store) {
      try {
        store.emplace(j.at("model").get<std::string>(), j.at("dim").get<std::size_t>());
      } catch (const json::exception&) {
        throw Error(Errc::MalformedHeader, "line " + std::to_string(line_no));
      }
      continue;
    }
    std::string key;
    std::vector<float> values;
    try {
      key = j.at("key").get<std::string>();
      const auto& arr = j.at("vector");
      values.reserve(arr.size());
      for (const auto& v : arr) values.push_back(static_cast<float>(v.get<double>()));
    } catch (const json::exception&) {
      throw Error(Errc::MalformedLine, "line " + std::to_string(line_no));
    }
    store->add(std::move(key), Vector(std::move(values)));
  }
  if (!store) throw Error(Errc::MalformedHeader, "missing header");
  return std::move(*store);
}

EmbeddingStore load_embeddings(const std::string& path) {
  return parse_embeddings(text::read_file(path));
}

std::string serialize_embeddings(const EmbeddingStore& store) {
  std::string out = json{{"model", store.model_id()}, {"dim", store.dim()}}.dump() + "\n";
  for (const auto& key : store.keys()) {
    const auto c = store.at(key).components();
    json row = {{"key", key}, {"vector", std::vector<float>(c.begin(), c.end())}};
    out += row.dump();
    out.push_back('\n');
  }
  return out;
}

std::unordered_map<std::string, double> score_all(const Vector& query, const EmbeddingStore& store) {
  if (query.dim() != store.dim()) {
    throw Error(Errc::DimMismatch, "query " + std::to_string(query.dim()) + " vs store " +
                                       std::to_string(store.dim()));
  }
  std::unordered_map<std::string, double> scores;
  scores.reserve(store.size());
  for (const auto& key : store.keys()) scores.emplace(key, cosine(query, store.at(key)));
  return scores;
}

FileEmbeddingProvider::FileEmbeddingProvider(std::shared_ptr<const EmbeddingStore> store)
    : store_(std::move(store)) {}

void FileEmbeddingProvider::register_text(std::string text, std::string key) {
  keys_[std::move(text)] = std::move(key);
}

Vector FileEmbeddingProvider::embed(std::string_view text) const {
  auto it = keys_.find(std::string(text));
  if (it == keys_.end()) {
    throw Error(Errc::NotPrecomputed, "no registered vector for text '" +
                                          std::string(text.substr(0, 80)) + "'");
  }
  return store_->at(it->second);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, std::string model_id,
                                             std::size_t dim)
    : base_url_(std::move(base_url)), model_id_(std::move(model_id)), dim_(dim) {}

Vector HttpEmbeddingProvider::embed(std::string_view text) const {
  return embed_batch({std::string(text)}).at(0);
}

std::vector<Vector> HttpEmbeddingProvider::embed_batch(const std::vector<std::string>& texts) const {
  const auto [host, prefix] = split_base_url(base_url_);
  httplib::Client client(host);
  client.set_read_timeout(std::chrono::seconds(120));
  const json body = {{"model", model_id_}, {"texts", texts}};
  auto res = client.Post(prefix + "/embed", body.dump(), "application/json");
  if (!res) throw Error(Errc::NetworkError, httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(Errc::ApiError, "status " + std::to_string(res->status) + ": " + res->body);
  }
  std::vector<Vector> out;
  try {
    const json reply = json::parse(res->body);
    for (const auto& row : reply.at("vectors")) {
      Vector v(row.get<std::vector<float>>());
      if (v.dim() != dim_) {
        throw Error(Errc::DimMismatch, "served " + std::to_string(v.dim()) + ", expected " +
                                           std::to_string(dim_));
      }
      out.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ApiError, std::string("unexpected /embed body: ") + e.what());
  }
  if (out.size() != texts.size()) throw Error(Errc::ApiError, "vector count mismatch");
  return out;
}

}  // namespace destrank::dense
