#include "doctest.h"

#include <cmath>
#include <random>

#include "infdecomp/covote.hpp"
#include "infdecomp/error.hpp"
#include "test_util.hpp"

using namespace infdecomp;

namespace {

using Votes = std::map<std::string, VotePosition>;

Votes make_votes(const std::string& pattern) {
  Votes v;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const VotePosition p = pattern[i] == 'y' ? VotePosition::yea : pattern[i] == 'n' ? VotePosition::nay : VotePosition::other;
    v["v" + std::to_string(i)] = p;
  }
  return v;
}

std::vector<double> unit_at(double cos_value) { return {cos_value, std::sqrt(1.0 - cos_value * cos_value)}; }

}  // namespace

TEST_CASE("covote_rate") {
  const auto r1 = covote_rate(make_votes("yynnyynnyn"), make_votes("yynnyynnyn"));
  CHECK(r1->lambda == 1.0);
  CHECK(r1->n_common == 10);
  const auto r2 = covote_rate(make_votes("yyyyynnnnn"), make_votes("nnnnnyyyyy"));
  CHECK(r2->lambda == 0.0);
  CHECK(r2->n_common == 10);
  // 7 of 10 agree; the two trailing "other" votes are ignored.
  const auto r3 = covote_rate(make_votes("yyyyyyynnnoy"), make_votes("yyyyyyyyyyyo"));
  CHECK(r3->lambda == doctest::Approx(0.7));
  CHECK(r3->n_common == 10);
  CHECK(r3->agreements == 7);
  CHECK_FALSE(covote_rate(make_votes("oo"), make_votes("yy")).has_value());

  std::mt19937 gen(4);
  for (int t = 0; t < 100; ++t) {
    std::string a, b;
    for (int i = 0; i < 15; ++i) {
      a += "yno"[gen() % 3];
      b += "yno"[gen() % 3];
    }
    const auto ab = covote_rate(make_votes(a), make_votes(b));
    const auto ba = covote_rate(make_votes(b), make_votes(a));
    REQUIRE(ab.has_value() == ba.has_value());
    if (ab) {
      CHECK(ab->lambda == ba->lambda);
      CHECK(ab->n_common == ba->n_common);
    }
  }
}

TEST_CASE("logit_response") {
  CHECK(logit_response(0.5, 10) == 0.0);
  CHECK(logit_response(1.0, 10) == doctest::Approx(std::log(0.95 / 0.05)).epsilon(1e-14));
  CHECK(logit_response(1.0, 10) == doctest::Approx(2.9444).epsilon(1e-4));
  CHECK(logit_response(0.0, 10) == doctest::Approx(-std::log(19.0)).epsilon(1e-14));
  double prev = -INFINITY;
  for (int k = 0; k <= 20; ++k) {
    const double lam = k / 20.0;
    const double v = logit_response(lam, 20);
    CHECK(v > prev);
    CHECK(v == doctest::Approx(-logit_response(1.0 - lam, 20)).epsilon(1e-12));
    prev = v;
  }
}

TEST_CASE("pair_similarity") {
  const Embeddings one = {{1.0, 0.0}};
  CHECK(*pair_similarity(one, {unit_at(0.3)}, 10) == doctest::Approx(0.3));
  CHECK(*pair_similarity(one, {unit_at(0.3)}, 90) == doctest::Approx(0.3));

  Embeddings ten;
  for (int k = 10; k >= 1; --k) ten.push_back(unit_at(k / 10.0));
  CHECK(*pair_similarity(one, ten, 10) == doctest::Approx(0.19).epsilon(1e-12));

  const Embeddings set = {{1, 0}, {0, 1}, {0.6, 0.8}};
  CHECK(*pair_similarity(set, set, 100) == doctest::Approx(1.0));
  CHECK_FALSE(pair_similarity({}, set, 10).has_value());

  const Embeddings other = {{0.3, 0.9}, {-1, 0.2}};
  Embeddings reversed(set.rbegin(), set.rend());
  for (double p : {0.0, 10.0, 37.5, 100.0}) {
    CHECK(*pair_similarity(set, other, p) == doctest::Approx(*pair_similarity(other, set, p)).epsilon(1e-15));
    CHECK(*pair_similarity(set, other, p) == doctest::Approx(*pair_similarity(reversed, other, p)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(pair_similarity(set, other, 101), CovoteError);
}

TEST_CASE("build_features") {
  std::map<std::string, Legislator> legs = {{"A", {"A", "D", "CA"}}, {"B", {"B", "D", "NY"}}, {"C", {"C", "R", "TX"}}};
  VoteTable votes = {{"A", make_votes("yyn")}, {"B", make_votes("yyy")}, {"C", make_votes("nny")}};
  TopicEmbeddings utt, dec;
  utt[{"A", 0}] = {{1, 0}};
  utt[{"B", 0}] = {{1, 0}};
  dec[{"A", 0}] = {{1, 0}};
  dec[{"B", 0}] = {{1, 0}};

  SUBCASE("identical singleton sets give similarity 1") {
    const auto r = build_features(votes, legs, utt, dec, 10);
    REQUIRE(r.observations.size() == 1);
    const auto& o = r.observations[0];
    CHECK(o.first == "A");
    CHECK(o.second == "B");
    CHECK(o.features.at(kSimUtterances) == doctest::Approx(1.0));
    CHECK(o.features.at(kSimDecompositions) == doctest::Approx(1.0));
    CHECK(o.features.at(kSameParty) == 1.0);
    CHECK(o.lambda == doctest::Approx(2.0 / 3.0));
    CHECK(o.response == doctest::Approx(logit_response(2.0 / 3.0, 3)));
    // C has no topic texts, so both of its pairs are dropped and counted.
    CHECK(r.dropped_no_shared_topics == 2);
    CHECK(r.pairs_considered == 3);
  }
  SUBCASE("feature is the mean over shared topics") {
    TopicEmbeddings u;
    const std::vector<double> sims = {0.2, 0.4, 0.9};
    for (int t = 0; t < 3; ++t) {
      u[{"A", t}] = {{1, 0}};
      u[{"B", t}] = {unit_at(sims[static_cast<std::size_t>(t)])};
    }
    u[{"C", 5}] = {{1, 0}};  // C shares no topic with anyone
    const auto r = build_features(votes, legs, u, u, 10);
    REQUIRE(r.observations.size() == 1);
    CHECK(r.observations[0].features.at(kSimUtterances) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("no surviving pair is an error") {
    CHECK_THROWS_AS(build_features(votes, legs, {}, {}, 10), CovoteError);
  }
}

TEST_CASE("csv loaders") {
  testutil::TempDir dir("votes");
  testutil::write_file(dir / "v.csv", "legislator_id,vote_id,position\nA,1,Yea\nA,2,nay\nB,1,yes\nB,2,Not Voting\n");
  const auto v = load_votes(dir / "v.csv");
  CHECK(v.at("A").at("1") == VotePosition::yea);
  CHECK(v.at("B").at("2") == VotePosition::other);
  testutil::write_file(dir / "dup.csv", "legislator_id,vote_id,position\nA,1,yea\nA,1,nay\n");
  CHECK_THROWS_AS(load_votes(dir / "dup.csv"), CovoteError);
  testutil::write_file(dir / "l.csv", "legislator_id,party,state\nA,D,CA\n");
  CHECK(load_legislators(dir / "l.csv").at("A").party == "D");
}

TEST_CASE("coefficient table formats") {
  testutil::TempDir dir("coef");
  std::vector<CoefficientRow> rows = {{"(intercept)", -0.5, 0.01, std::nullopt}, {kSimDecompositions, 7.47, 0.17, 2000.0}};
  write_coefficient_table(dir / "c.csv", rows);
  CHECK(testutil::read_file(dir / "c.csv") ==
        "covariate,beta,se,delta_bic\n(intercept),-0.5000,0.0100,--\nsim_decompositions,7.4700,0.1700,2000.0000\n");
  const auto line = format_coefficient_row(rows[1]);
  CHECK(line.find("Sim. Decompositions") == 0);
  CHECK(line.find("7.4700 (0.1700)") != std::string::npos);
  CHECK(line.find("2.0k") != std::string::npos);
}
