#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace destrank::dense {

/// Fixed-length float32 embedding.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::vector<float> components);

  std::size_t dim() const noexcept { return components_.size(); }
  std::span<const float> components() const noexcept { return components_; }
  float operator[](std::size_t i) const { return components_[i]; }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<float> components_;
};

/// dot(a, b) / (|a| |b|), accumulated in double. Returns 0 when either norm
/// is zero (and bumps zero_norm_count()). Throws Error{DimMismatch}.
double cosine(const Vector& a, const Vector& b);
std::size_t zero_norm_count() noexcept;

/// Embeddings keyed "dest_id#paragraph_index" or "qid#method".
class EmbeddingStore {
 public:
  EmbeddingStore(std::string model_id, std::size_t dim);

  const std::string& model_id() const noexcept { return model_id_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.size(); }
  /// Insertion order.
  const std::vector<std::string>& keys() const noexcept { return keys_; }

  /// Throws Error{DimMismatch} or Error{DuplicateKey}.
  void add(std::string key, Vector v);
  const Vector* find(std::string_view key) const;
  /// Throws Error{NotPrecomputed}.
  const Vector& at(std::string_view key) const;

 private:
  std::string model_id_;
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, Vector> vectors_;
};

/// Reads embeddings.jsonl: a {"model", "dim"} header line, then one
/// {"key", "vector"} object per line.
EmbeddingStore load_embeddings(const std::string& path);
EmbeddingStore parse_embeddings(std::string_view jsonl);
std::string serialize_embeddings(const EmbeddingStore& store);

/// Cosine against every vector in the store, keyed like the store.
std::unordered_map<std::string, double> score_all(const Vector& query, const EmbeddingStore& store);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector embed(std::string_view text) const = 0;
};

/// Precomputed vectors. Texts must be registered against a store key first;
/// an unregistered text throws Error{NotPrecomputed}.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(std::shared_ptr<const EmbeddingStore> store);

  void register_text(std::string text, std::string key);
  std::size_t dim() const override { return store_->dim(); }
  Vector embed(std::string_view text) const override;
  const EmbeddingStore& store() const noexcept { return *store_; }

 private:
  std::shared_ptr<const EmbeddingStore> store_;
  std::unordered_map<std::string, std::string> keys_;
};

/// POST {base_url}/embed {"model", "texts": [...]} -> {"vectors": [[...]]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string base_url, std::string model_id, std::size_t dim);

  std::size_t dim() const override { return dim_; }
  Vector embed(std::string_view text) const override;
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const;

 private:
  std::string base_url_;
  std::string model_id_;
  std::size_t dim_;
};

inline Vector embed(const EmbeddingProvider& provider, std::string_view text) {
  return provider.embed(text);
}

}  // namespace destrank::dense
