#include "doctest.h"

#include <cmath>
#include <random>

#include "infdecomp/embedder.hpp"
#include "infdecomp/error.hpp"
#include "test_util.hpp"

using namespace infdecomp;

namespace {

// Reference FNV-1a 64: offset basis 14695981039346656037, prime 1099511628211.
std::uint64_t fnv_oracle(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EmbeddingVector ev(std::vector<double> v, std::string pid = "p") { return {std::move(v), std::move(pid)}; }

std::vector<double> concat(const AugmentedRepresentation& r) {
  auto out = r.base.values;
  out.insert(out.end(), r.decomposition_mean.values.begin(), r.decomposition_mean.values.end());
  return out;
}

double naive_cos(const std::vector<double>& a, const std::vector<double>& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return static_cast<double>(ab / std::sqrt(aa * bb));
}

}  // namespace

TEST_CASE("hashing provider buckets") {
  HashingProvider p;
  CHECK(p.id() == "hash-fnv1a-256");
  CHECK(fnv_oracle("") == 14695981039346656037ULL);
  CHECK(fnv_oracle("a") == 0xaf63dc4c8601ec8cULL);

  const auto counts = p.raw_counts("cat cat dog");
  const std::size_t cat = fnv_oracle("cat") % 256;
  const std::size_t dog = fnv_oracle("dog") % 256;
  REQUIRE(cat != dog);
  std::size_t nonzero = 0;
  for (double c : counts) nonzero += c != 0.0;
  CHECK(nonzero == 2);
  CHECK(counts[cat] == 2.0);
  CHECK(counts[dog] == 1.0);
}

TEST_CASE("hashing provider properties") {
  HashingProvider p;
  EmbeddingCache cache;
  const auto v = embed_batch({"a b", "b a", "Cat, DOG!", "cat dog", "a b"}, p, cache);
  CHECK(v[0] == v[1]);
  CHECK(v[2] == v[3]);
  CHECK(v[0] == v[4]);
  for (const auto& e : v) {
    double sq = 0;
    for (double x : e.values) sq += x * x;
    CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-6);
    CHECK(e.dim() == 256);
  }
  CHECK(HashingProvider::tokenize("caf\xC3\xA9 au-lait") == std::vector<std::string>{"caf\xC3\xA9", "au", "lait"});
}

TEST_CASE("embed_batch cache") {
  testutil::TempDir dir("emb");
  HashingProvider p;
  {
    EmbeddingCache cache(dir / "e.jsonl");
    embed_batch({"one", "two", "one"}, p, cache);
    CHECK(p.calls() == 1);
    CHECK(cache.size() == 2);
  }
  EmbeddingCache warm(dir / "e.jsonl");
  HashingProvider p2;
  const auto again = embed_batch({"two", "  one "}, p2, warm);
  CHECK(p2.calls() == 0);
  CHECK(again[1] == embed_batch({"one"}, p, warm)[0]);
  CHECK_THROWS_AS(embed_batch({"  "}, p, warm), EmbeddingError);

  SUBCASE("batches") {
    HashingProvider p3;
    EmbeddingCache c;
    std::vector<std::string> many;
    for (int i = 0; i < 10; ++i) many.push_back("text " + std::to_string(i));
    embed_batch(many, p3, c, {4});
    CHECK(p3.calls() == 3);
  }
}

TEST_CASE("augment") {
  const auto e = ev({1, 0});
  SUBCASE("mean of identical vectors") {
    const auto v = ev({0.3, 0.4});
    CHECK(augment(e, {v, v}).decomposition_mean == v);
  }
  SUBCASE("empty list duplicates the base") {
    const auto r = augment(e, {});
    CHECK(r.decomposition_mean == e);
  }
  SUBCASE("arithmetic mean") {
    CHECK(augment(e, {ev({1, 0}), ev({0, 1})}).decomposition_mean.values == std::vector<double>{0.5, 0.5});
    CHECK(augment(e, {ev({1, 0}), ev({0, 1})}, GenerationAggregate::sum).decomposition_mean.values ==
          std::vector<double>{1, 1});
  }
  SUBCASE("duplicating the list leaves the mean unchanged") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 50; ++t) {
      std::vector<EmbeddingVector> gens;
      for (int k = 0; k < 1 + t % 7; ++k) gens.push_back(ev({u(gen), u(gen), u(gen)}));
      auto doubled = gens;
      doubled.insert(doubled.end(), gens.begin(), gens.end());
      const auto base = ev({1, 2, 3});
      CHECK(augment(base, gens).decomposition_mean == augment(base, doubled).decomposition_mean);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(augment(e, {ev({1, 0, 0})}), EmbeddingError);
    CHECK_THROWS_AS(augment(e, {ev({1, 0}, "other")}), EmbeddingError);
  }
}

TEST_CASE("augmented_cosine") {
  SUBCASE("closed form example") {
    AugmentedRepresentation x{ev({1, 0}), ev({1, 0})};
    AugmentedRepresentation y{ev({0, 1}), ev({1, 0})};
    CHECK(augmented_cosine(x, y) == doctest::Approx((0.0 + 1.0) / (std::sqrt(2.0) * std::sqrt(2.0))).epsilon(1e-15));
    CHECK(augmented_cosine(x, y) == doctest::Approx(0.5));
  }
  SUBCASE("orthogonal") {
    AugmentedRepresentation x{ev({1, 0}), ev({1, 0})};
    AugmentedRepresentation y{ev({0, 1}), ev({0, 1})};
    CHECK(augmented_cosine(x, y) == 0.0);
  }
  SUBCASE("zero norm") {
    AugmentedRepresentation z{ev({0, 0}), ev({0, 0})};
    CHECK_THROWS_AS(augmented_cosine(z, z), EmbeddingError);
  }
  SUBCASE("random properties") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> n(0, 1);
    auto rv = [&](int d) {
      std::vector<double> v(d);
      for (auto& x : v) x = n(gen);
      return ev(v);
    };
    for (int t = 0; t < 200; ++t) {
      const int d = 1 + t % 9;
      AugmentedRepresentation x{rv(d), rv(d)}, y{rv(d), rv(d)};
      CHECK(augmented_cosine(x, x) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(augmented_cosine(x, y) - augmented_cosine(y, x)) <= 1e-12);
      CHECK(std::abs(augmented_cosine(x, y) - naive_cos(concat(x), concat(y))) <= 1e-12);
      // Duplicated representations reduce exactly to baseline cosine.
      const auto dx = augment(x.base, {});
      const auto dy = augment(y.base, {});
      CHECK(augmented_cosine(dx, dy) == cosine(x.base.values, y.base.values));
    }
  }
}
