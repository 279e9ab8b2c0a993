#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "infdecomp/http.hpp"

namespace infdecomp {

struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_id;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;

  // One vector per input text, same order.
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) {
    ++calls_;
    return do_embed(texts);
  }
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual std::vector<std::vector<double>> do_embed(std::span<const std::string> texts) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

// Deterministic bag-of-words hashing encoder: lowercase ASCII, split on
// non-alphanumerics, FNV-1a 64 per token, bucket = hash mod dim, counts,
// then L2 normalization. Bytes >= 0x80 count as word characters so UTF-8
// words stay whole.
class HashingProvider : public EmbeddingProvider {
 public:
  explicit HashingProvider(std::size_t dim = 256) : dim_(dim) {}
  std::string id() const override { return "hash-fnv1a-" + std::to_string(dim_); }
  std::size_t dim() const { return dim_; }

  static std::vector<std::string> tokenize(std::string_view text);
  // Bucket counts before normalization.
  std::vector<double> raw_counts(std::string_view text) const;

 protected:
  std::vector<std::vector<double>> do_embed(std::span<const std::string> texts) override;

 private:
  std::size_t dim_;
};

// POSTs {texts: [...]} and expects {vectors: [[...], ...]}. The dimension
// returned by the first successful call is pinned.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpEndpoint endpoint, RetryPolicy retry, std::string model_id = "remote")
      : endpoint_(std::move(endpoint)), retry_(retry), model_id_(std::move(model_id)) {}
  std::string id() const override { return "http:" + model_id_; }

 protected:
  std::vector<std::vector<double>> do_embed(std::span<const std::string> texts) override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  std::string model_id_;
  std::mutex dim_mutex_;
  std::optional<std::size_t> dim_;
};

// Cache keyed by (provider_id, SHA-256 of normalized text). Persisted as
// JSONL {provider_id, text_hash, vector}; an empty path keeps it in memory.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path path = {});

  std::optional<std::vector<double>> lookup(const std::string& provider_id, const std::string& text_hash) const;
  void store(const std::string& provider_id, const std::string& text_hash, const std::vector<double>& vec);
  std::size_t size() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> entries_;
  std::vector<std::string> warnings_;
};

std::string text_hash(std::string_view text);

struct EmbedOptions {
  std::size_t batch_size = 64;
};

// Embeds texts through the cache; only unseen normalized texts reach the
// provider, in batches. Provider failure raises TransportError naming the
// batch. Throws EmbeddingError on non-finite values or dimension drift.
std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts, EmbeddingProvider& provider,
                                         EmbeddingCache& cache, const EmbedOptions& options = {});

enum class GenerationAggregate { mean, sum };

struct AugmentedRepresentation {
  EmbeddingVector base;
  EmbeddingVector decomposition_mean;
};

// Pairs a document embedding with the mean (or sum) of its generation
// embeddings. An empty generation list duplicates the base vector.
AugmentedRepresentation augment(const EmbeddingVector& doc_embedding, const std::vector<EmbeddingVector>& gen_embeddings,
                                GenerationAggregate aggregate = GenerationAggregate::mean);

// Cosine similarity computed as dot / sqrt(|a|^2 |b|^2). Throws on zero norm
// or dimension mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

// Cosine of the concatenations [base; decomposition_mean].
double augmented_cosine(const AugmentedRepresentation& x, const AugmentedRepresentation& y);

}  // namespace infdecomp
