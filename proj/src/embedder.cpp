#include "infdecomp/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <fmt/format.h>

#include "infdecomp/error.hpp"
#include "infdecomp/hashing.hpp"
#include "infdecomp/numeric.hpp"
#include "infdecomp/text.hpp"
#include "json.hpp"

namespace infdecomp {
namespace {

using nlohmann::json;

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

void l2_normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return;
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::string cache_key(const std::string& provider_id, const std::string& hash) { return provider_id + '\x1f' + hash; }

void check_finite(const std::vector<double>& v, std::string_view what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw EmbeddingError(fmt::format("{}: non-finite embedding value", what));
  }
}

}  // namespace

std::vector<std::string> HashingProvider::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<double> HashingProvider::raw_counts(std::string_view input) const {
  std::vector<double> v(dim_, 0.0);
  auto tokens = tokenize(input);
  if (tokens.empty()) {
    // punctuation-only text: hash it whole so the vector is never zero
    const std::string whole = text::trim(input);
    tokens.push_back(whole.empty() ? std::string(" ") : whole);
  }
  for (const auto& tok : tokens) v[fnv1a64(tok) % dim_] += 1.0;
  return v;
}

std::vector<std::vector<double>> HashingProvider::do_embed(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto v = raw_counts(t);
    l2_normalize(v);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> HttpEmbeddingProvider::do_embed(std::span<const std::string> texts) {
  const json body = {{"model", model_id_}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const json response = post_json(endpoint_, body, retry_);
  std::vector<std::vector<double>> vectors;
  try {
    vectors = response.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw EmbeddingError(fmt::format("{}: malformed embedding response: {}", endpoint_.url, e.what()));
  }
  if (vectors.size() != texts.size())
    throw EmbeddingError(fmt::format("{}: expected {} vectors, got {}", endpoint_.url, texts.size(), vectors.size()));
  std::lock_guard lock(dim_mutex_);
  for (const auto& v : vectors) {
    if (!dim_) dim_ = v.size();
    if (v.size() != *dim_)
      throw EmbeddingError(fmt::format("{}: dimension changed from {} to {}", endpoint_.url, *dim_, v.size()));
  }
  return vectors;
}

std::string text_hash(std::string_view t) { return sha256_hex(text::normalize(t)); }

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json rec = json::parse(line);
      entries_[cache_key(rec.at("provider_id").get<std::string>(), rec.at("text_hash").get<std::string>())] =
          rec.at("vector").get<std::vector<double>>();
    } catch (const json::exception& e) {
      warnings_.push_back(fmt::format("{} line {}: ignoring corrupted cache entry ({})", path_.string(), line_no, e.what()));
    }
  }
}

std::optional<std::vector<double>> EmbeddingCache::lookup(const std::string& provider_id, const std::string& hash) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(cache_key(provider_id, hash));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::store(const std::string& provider_id, const std::string& hash, const std::vector<double>& vec) {
  std::lock_guard lock(mutex_);
  entries_[cache_key(provider_id, hash)] = vec;
  if (path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw EmbeddingError("cannot append to cache " + path_.string());
  out << json{{"provider_id", provider_id}, {"text_hash", hash}, {"vector", vec}}.dump() << '\n';
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts, EmbeddingProvider& provider,
                                         EmbeddingCache& cache, const EmbedOptions& options) {
  const std::string pid = provider.id();
  std::vector<std::string> hashes;
  hashes.reserve(texts.size());
  std::unordered_map<std::string, std::vector<double>> resolved;
  std::vector<std::string> missing_texts;
  std::vector<std::string> missing_hashes;

  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw EmbeddingError("embed_batch: empty text");
    std::string h = text_hash(t);
    if (!resolved.contains(h)) {
      if (auto hit = cache.lookup(pid, h)) {
        resolved.emplace(h, std::move(*hit));
      } else {
        resolved.emplace(h, std::vector<double>{});
        missing_texts.push_back(text::normalize(t));
        missing_hashes.push_back(h);
      }
    }
    hashes.push_back(std::move(h));
  }

  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t start = 0; start < missing_texts.size(); start += batch) {
    const std::size_t end = std::min(start + batch, missing_texts.size());
    std::vector<std::vector<double>> vectors;
    try {
      vectors = provider.embed(std::span<const std::string>(missing_texts).subspan(start, end - start));
    } catch (const TransportError& e) {
      throw TransportError(fmt::format("embedding batch [{}, {}) of {} uncached texts failed: {}", start, end,
                                       missing_texts.size(), e.what()));
    }
    if (vectors.size() != end - start)
      throw EmbeddingError(fmt::format("provider {} returned {} vectors for {} texts", pid, vectors.size(), end - start));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      check_finite(vectors[i], pid);
      cache.store(pid, missing_hashes[start + i], vectors[i]);
      resolved[missing_hashes[start + i]] = std::move(vectors[i]);
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::size_t dim = 0;
  for (const auto& h : hashes) {
    const auto& v = resolved.at(h);
    if (dim == 0) dim = v.size();
    if (v.size() != dim || dim == 0) throw EmbeddingError(fmt::format("provider {}: inconsistent embedding dimension", pid));
    out.push_back({v, pid});
  }
  return out;
}

AugmentedRepresentation augment(const EmbeddingVector& doc_embedding, const std::vector<EmbeddingVector>& gen_embeddings,
                                GenerationAggregate aggregate) {
  const std::size_t d = doc_embedding.dim();
  for (const auto& g : gen_embeddings) {
    if (g.dim() != d)
      throw EmbeddingError(fmt::format("augment: dimension mismatch ({} vs {})", g.dim(), d));
    if (g.provider_id != doc_embedding.provider_id)
      throw EmbeddingError(fmt::format("augment: provider mismatch ({} vs {})", g.provider_id, doc_embedding.provider_id));
  }
  if (gen_embeddings.empty()) return {doc_embedding, doc_embedding};

  EmbeddingVector agg{std::vector<double>(d), doc_embedding.provider_id};
  std::vector<double> column(gen_embeddings.size());
  const double n = static_cast<double>(gen_embeddings.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < gen_embeddings.size(); ++k) column[k] = gen_embeddings[k].values[j];
    const double s = exact_sum(column);
    agg.values[j] = aggregate == GenerationAggregate::mean ? s / n : s;
  }
  return {doc_embedding, std::move(agg)};
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw EmbeddingError(fmt::format("cosine: dimension mismatch ({} vs {})", a.size(), b.size()));
  const double na = dot(a, a);
  const double nb = dot(b, b);
  if (na == 0.0 || nb == 0.0) throw EmbeddingError("cosine: zero-norm vector");
  return std::clamp(dot(a, b) / std::sqrt(na * nb), -1.0, 1.0);
}

double augmented_cosine(const AugmentedRepresentation& x, const AugmentedRepresentation& y) {
  if (x.base.dim() != y.base.dim() || x.decomposition_mean.dim() != y.decomposition_mean.dim() ||
      x.base.dim() != x.decomposition_mean.dim())
    throw EmbeddingError("augmented_cosine: dimension mismatch");
  const double num = dot(x.base.values, y.base.values) + dot(x.decomposition_mean.values, y.decomposition_mean.values);
  const double nx = dot(x.base.values, x.base.values) + dot(x.decomposition_mean.values, x.decomposition_mean.values);
  const double ny = dot(y.base.values, y.base.values) + dot(y.decomposition_mean.values, y.decomposition_mean.values);
  if (nx == 0.0 || ny == 0.0) throw EmbeddingError("augmented_cosine: zero-norm concatenation");
  return std::clamp(num / std::sqrt(nx * ny), -1.0, 1.0);
}

}  // namespace infdecomp
