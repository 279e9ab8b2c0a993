#include "doctest.h"

#include <algorithm>
#include <set>

#include "infdecomp/corpus.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/text.hpp"
#include "test_util.hpp"

using namespace infdecomp;

TEST_CASE("load_corpus keeps file order") {
  testutil::TempDir dir("corpus");
  testutil::write_file(dir / "c.jsonl",
                       R"({"id":"a","text":"First."})"
                       "\n"
                       R"({"id":"b","text":"  Second   one. ","source":"tweet","meta":{"legislator":"L1"}})"
                       "\n\n"
                       R"({"id":"c","text":"Third."})"
                       "\n");
  const auto docs = load_corpus(dir / "c.jsonl");
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].doc_id == "a");
  CHECK(docs[1].doc_id == "b");
  CHECK(docs[2].doc_id == "c");
  CHECK(docs[1].text == "Second one.");
  CHECK(docs[1].source == Source::tweet);
  CHECK(docs[1].meta.at("legislator") == "L1");
}

TEST_CASE("load_corpus rejects duplicates and malformed records") {
  SUBCASE("duplicate id names the id") {
    try {
      parse_corpus("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
      FAIL("expected CorpusError");
    } catch (const CorpusError& e) {
      CHECK(std::string(e.what()).find("\"a\"") != std::string::npos);
    }
  }
  SUBCASE("missing text names the line") {
    try {
      parse_corpus("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\"}\n");
      FAIL("expected CorpusError");
    } catch (const CorpusError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("not json") { CHECK_THROWS_AS(parse_corpus("{oops\n"), CorpusError); }
  SUBCASE("blank text") { CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"text\":\"   \"}\n"), CorpusError); }
  SUBCASE("unknown source") {
    CHECK_THROWS_AS(parse_corpus("{\"id\":\"a\",\"text\":\"x\",\"source\":\"blog\"}\n"), CorpusError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), CorpusError); }
}

TEST_CASE("ingest normalizes to NFC") {
  // "e" + combining acute -> precomposed U+00E9
  const auto docs = parse_corpus("{\"id\":\"a\",\"text\":\"caf\\u0065\\u0301\\tlatte\"}\n");
  CHECK(docs[0].text == "caf\xC3\xA9 latte");
}

TEST_CASE("split_sentences") {
  CHECK(split_sentences("Vaccines are new. They worry me.") ==
        std::vector<std::string>{"Vaccines are new.", "They worry me."});
  CHECK(split_sentences("No punctuation here") == std::vector<std::string>{"No punctuation here"});
  CHECK(split_sentences("Kids recover! Why mandate? See data.") ==
        std::vector<std::string>{"Kids recover!", "Why mandate?", "See data."});
  SUBCASE("abbreviations suppress splits") {
    CHECK(split_sentences("Ask Dr. Smith about it. He knows.") ==
          std::vector<std::string>{"Ask Dr. Smith about it.", "He knows."});
    CHECK(split_sentences("Made in the U.S. Army labs.").size() == 1);
  }
  SUBCASE("lowercase continuation is not a boundary") {
    CHECK(split_sentences("Values like 3.5 are fine. ok then.").size() == 1);
  }
  SUBCASE("terminator runs and closing quotes") {
    CHECK(split_sentences("Really?! \"Yes.\" Then go.") == std::vector<std::string>{"Really?!", "\"Yes.\"", "Then go."});
  }
  SUBCASE("units carry parent and index") {
    Document d{"doc1", "One. Two.", Source::other, {}};
    const auto units = split_sentences(d);
    REQUIRE(units.size() == 2);
    CHECK(units[1].parent_id == "doc1");
    CHECK(units[1].index == 1);
  }
}

TEST_CASE("sentence splitting is a partition (property)") {
  const std::vector<std::string> pieces = {"Hello", "world.", "Dr.", "Who?", "yes!", "A", "b.", "U.S.", "Kids", "Run.",
                                           "\"Quote.\"", "x", "...", "OK?!", "No", "  "};
  std::mt19937 gen(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::string t;
    const int len = 1 + static_cast<int>(gen() % 12);
    for (int i = 0; i < len; ++i) {
      t += pieces[gen() % pieces.size()];
      t += (gen() % 3 == 0) ? "  " : " ";
    }
    if (text::trim(t).empty()) continue;
    const auto units = split_sentences(t);
    for (const auto& u : units) CHECK_FALSE(text::trim(u).empty());
    CHECK(text::collapse_whitespace(text::join(units, " ")) == text::collapse_whitespace(t));
    CHECK(split_sentences(t) == units);
  }
}

TEST_CASE("views are derived, never aliased") {
  auto docs = parse_corpus("{\"id\":\"a\",\"text\":\"One. Two.\"}\n{\"id\":\"b\",\"text\":\"Three\"}\n");
  const CorpusView comments = comments_view(docs);
  const auto before = comments.items;
  const CorpusView sentences = sentences_view(docs);
  CHECK(comments.items == before);
  REQUIRE(sentences.items.size() == 3);
  CHECK(sentences.items[0].item_id == "a#s0");
  CHECK(sentences.items[1].parent_id == "a");
  for (const auto& item : comments.items) CHECK(item.parent_id == item.item_id);
}

TEST_CASE("subsample") {
  CorpusView view{ViewKind::comments, {}};
  for (int i = 0; i < 10000; ++i) view.items.push_back({"id" + std::to_string(i), "t", "id" + std::to_string(i)});

  auto ids = [](const CorpusView& v) {
    std::set<std::string> s;
    for (const auto& it : v.items) s.insert(it.item_id);
    return s;
  };

  SUBCASE("full sample is a permutation") {
    CorpusView small{ViewKind::comments, {view.items.begin(), view.items.begin() + 50}};
    const auto all = subsample(small, 50, 3);
    CHECK(ids(all) == ids(small));
  }
  SUBCASE("deterministic for a seed") {
    CHECK(subsample(view, 100, 42).items == subsample(view, 100, 42).items);
  }
  SUBCASE("different seeds give different sets") {
    const auto a = subsample(view, 100, 1);
    const auto b = subsample(view, 100, 2);
    CHECK(ids(a) != ids(b));
  }
  SUBCASE("subset of exactly n distinct items") {
    const auto s = subsample(view, 137, 9);
    CHECK(s.items.size() == 137);
    CHECK(ids(s).size() == 137);
    for (const auto& id : ids(s)) CHECK(ids(view).contains(id));
  }
  SUBCASE("n too large") { CHECK_THROWS_AS(subsample(view, 10001, 1), CorpusError); }
}

TEST_CASE("view jsonl round trip") {
  testutil::TempDir dir("view");
  auto docs = parse_corpus("{\"id\":\"a\",\"text\":\"One. Two.\"}\n");
  const auto v = sentences_view(docs);
  write_view(dir / "v.jsonl", v);
  CHECK(read_view(dir / "v.jsonl", ViewKind::sentences).items == v.items);
}
