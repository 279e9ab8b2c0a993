#include "infdecomp/corpus.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "infdecomp/error.hpp"
#include "infdecomp/rng.hpp"
#include "infdecomp/text.hpp"
#include "json.hpp"

namespace infdecomp {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kSourceNames = {"fda_comment", "tweet", "sts_item", "other"};

// Tokens that end in '.' without ending a sentence.
constexpr std::array<std::string_view, 28> kAbbreviations = {
    "Dr.",  "Mr.",  "Mrs.", "Ms.",  "Prof.", "Sr.",  "Jr.",  "St.",   "Mt.",   "Gen.",
    "Gov.", "Sen.", "Rep.", "Col.", "Lt.",   "Sgt.", "Inc.", "Ltd.",  "Co.",   "vs.",
    "e.g.", "i.e.", "No.",  "U.S.", "U.K.",  "U.N.", "Ph.D.", "a.m."};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

bool ends_with_abbreviation(std::string_view text, std::size_t dot_pos) {
  std::size_t start = dot_pos;
  while (start > 0 && !is_space(text[start - 1])) --start;
  const std::string_view token = text.substr(start, dot_pos + 1 - start);
  for (auto abbr : kAbbreviations) {
    if (token == abbr) return true;
    // allow leading punctuation such as "(Dr."
    if (token.size() > abbr.size() && token.ends_with(abbr) && !std::isalnum(static_cast<unsigned char>(token[token.size() - abbr.size() - 1])))
      return true;
  }
  // single-letter initial, e.g. "J. Smith"
  return token.size() == 2 && std::isupper(static_cast<unsigned char>(token[0]));
}

Document parse_record(const std::string& line, std::size_t line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(fmt::format("line {}: malformed record: {}", line_no, e.what()));
  }
  if (!rec.is_object()) throw CorpusError(fmt::format("line {}: malformed record: not a JSON object", line_no));
  auto id_it = rec.find("id");
  if (id_it == rec.end() || !id_it->is_string())
    throw CorpusError(fmt::format("line {}: malformed record: missing string field \"id\"", line_no));
  auto text_it = rec.find("text");
  if (text_it == rec.end() || !text_it->is_string())
    throw CorpusError(fmt::format("line {}: malformed record: missing string field \"text\"", line_no));

  Document doc;
  doc.doc_id = id_it->get<std::string>();
  if (doc.doc_id.empty()) throw CorpusError(fmt::format("line {}: malformed record: empty id", line_no));
  doc.text = text::normalize(text_it->get<std::string>());
  if (doc.text.empty()) throw CorpusError(fmt::format("line {}: malformed record: empty text", line_no));

  if (auto it = rec.find("source"); it != rec.end() && !it->is_null()) {
    if (!it->is_string()) throw CorpusError(fmt::format("line {}: malformed record: \"source\" must be a string", line_no));
    try {
      doc.source = source_from_string(it->get<std::string>());
    } catch (const CorpusError& e) {
      throw CorpusError(fmt::format("line {}: malformed record: {}", line_no, e.what()));
    }
  }
  if (auto it = rec.find("meta"); it != rec.end() && !it->is_null()) {
    if (!it->is_object()) throw CorpusError(fmt::format("line {}: malformed record: \"meta\" must be an object", line_no));
    for (const auto& [k, v] : it->items()) {
      doc.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return doc;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string_view to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }

Source source_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == s) return static_cast<Source>(i);
  }
  throw CorpusError(fmt::format("unknown source \"{}\"", s));
}

std::string_view to_string(ViewKind k) {
  switch (k) {
    case ViewKind::comments:
      return "comments";
    case ViewKind::sentences:
      return "sentences";
    case ViewKind::generations:
      return "generations";
  }
  return "?";
}

std::vector<Document> parse_corpus(std::string_view jsonl) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string line(jsonl.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (text::trim(line).empty()) continue;
    Document doc = parse_record(line, line_no);
    if (!seen.insert(doc.doc_id).second)
      throw CorpusError(fmt::format("line {}: duplicate doc_id \"{}\"", line_no, doc.doc_id));
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  (void)format;  // JSONL is the only format
  return parse_corpus(read_file(path));
}

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& d : docs) {
    json rec = {{"id", d.doc_id}, {"text", d.text}, {"source", to_string(d.source)}, {"meta", d.meta}};
    out << rec.dump() << '\n';
  }
}

std::vector<std::string> split_sentences(std::string_view raw) {
  const std::string t = text::collapse_whitespace(raw);
  std::vector<std::string> units;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < t.size()) {
    if (!is_terminator(t[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < t.size() && is_terminator(t[j])) ++j;
    const bool single_dot = j - i == 1 && t[i] == '.';
    while (j < t.size() && is_closer(t[j])) ++j;
    bool boundary = false;
    std::size_t next = j + 1;
    while (next < t.size() && is_opener(t[next])) ++next;
    if (j < t.size() && t[j] == ' ' && text::is_uppercase_at(t, next)) {
      boundary = !(single_dot && ends_with_abbreviation(t, i));
    }
    if (boundary) {
      units.push_back(t.substr(start, j - start));
      start = j + 1;
    }
    i = j;
  }
  if (start < t.size()) units.push_back(t.substr(start));
  return units;
}

std::vector<SentenceUnit> split_sentences(const Document& doc) {
  std::vector<SentenceUnit> out;
  auto parts = split_sentences(doc.text);
  out.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) out.push_back({doc.doc_id, i, std::move(parts[i])});
  return out;
}

CorpusView comments_view(const std::vector<Document>& docs) {
  CorpusView v{ViewKind::comments, {}};
  v.items.reserve(docs.size());
  for (const auto& d : docs) v.items.push_back({d.doc_id, d.text, d.doc_id});
  return v;
}

CorpusView sentences_view(const std::vector<Document>& docs) {
  CorpusView v{ViewKind::sentences, {}};
  for (const auto& d : docs) {
    for (auto& unit : split_sentences(d)) {
      v.items.push_back({fmt::format("{}#s{}", d.doc_id, unit.index), std::move(unit.text), d.doc_id});
    }
  }
  return v;
}

CorpusView subsample(const CorpusView& view, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw CorpusError("subsample: n must be positive");
  if (n > view.items.size())
    throw CorpusError(fmt::format("subsample: n = {} exceeds view size {}", n, view.items.size()));
  Rng rng(seed);
  CorpusView out{view.kind, {}};
  out.items.reserve(n);
  for (std::size_t idx : rng.sample_without_replacement(view.items.size(), n)) out.items.push_back(view.items[idx]);
  return out;
}

void write_view(const std::filesystem::path& path, const CorpusView& view) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& item : view.items) {
    out << json{{"id", item.item_id}, {"text", item.text}, {"parent_id", item.parent_id}}.dump() << '\n';
  }
}

CorpusView read_view(const std::filesystem::path& path, ViewKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open " + path.string());
  CorpusView v{kind, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto rec = json::parse(line);
      v.items.push_back({rec.at("id").get<std::string>(), rec.at("text").get<std::string>(),
                         rec.at("parent_id").get<std::string>()});
    } catch (const json::exception& e) {
      throw CorpusError(fmt::format("{} line {}: malformed view record: {}", path.string(), line_no, e.what()));
    }
  }
  return v;
}

}  // namespace infdecomp
