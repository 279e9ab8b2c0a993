#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace infdecomp {

enum class Source { fda_comment, tweet, sts_item, other };

std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

struct Document {
  std::string doc_id;
  std::string text;  // normalized: NFC, trimmed, single spaces
  Source source = Source::other;
  std::map<std::string, std::string> meta;

  bool operator==(const Document&) const = default;
};

struct SentenceUnit {
  std::string parent_id;
  std::size_t index = 0;
  std::string text;
};

enum class ViewKind { comments, sentences, generations };

std::string_view to_string(ViewKind k);

struct ViewItem {
  std::string item_id;
  std::string text;
  std::string parent_id;

  bool operator==(const ViewItem&) const = default;
};

struct CorpusView {
  ViewKind kind = ViewKind::comments;
  std::vector<ViewItem> items;
};

enum class CorpusFormat { jsonl };

// Reads a JSONL corpus ({"id", "text", optional "source", "meta"} per line).
// Blank lines are skipped. Throws CorpusError naming the line number for a
// malformed record and naming the id for a duplicate.
std::vector<Document> load_corpus(const std::filesystem::path& path,
                                  CorpusFormat format = CorpusFormat::jsonl);
std::vector<Document> parse_corpus(std::string_view jsonl);

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

// Rule-based splitter: a boundary follows a run of `.`, `!` or `?` when the
// next character is whitespace followed by an uppercase letter (or the text
// ends). Known abbreviations ("Dr.", "U.S.", ...) never end a sentence.
std::vector<SentenceUnit> split_sentences(const Document& doc);
std::vector<std::string> split_sentences(std::string_view text);

CorpusView comments_view(const std::vector<Document>& docs);
CorpusView sentences_view(const std::vector<Document>& docs);

// Uniform sample of n items without replacement; reproducible for a seed.
CorpusView subsample(const CorpusView& view, std::size_t n, std::uint64_t seed);

// Writes items as JSONL {id, text, parent_id}.
void write_view(const std::filesystem::path& path, const CorpusView& view);
CorpusView read_view(const std::filesystem::path& path, ViewKind kind);

}  // namespace infdecomp
