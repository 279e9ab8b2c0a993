#include "infdecomp/topics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "infdecomp/error.hpp"
#include "infdecomp/rng.hpp"
#include "infdecomp/text.hpp"
#include "json.hpp"

namespace infdecomp {
namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kWords = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as", "at",
      "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could",
      "did", "do", "does", "doing", "don", "down", "during", "each", "few", "for", "from", "further", "had",
      "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i",
      "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no",
      "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves",
      "out", "over", "own", "rt", "same", "she", "should", "so", "some", "such", "than", "that", "the",
      "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through",
      "to", "too", "under", "until", "up", "us", "very", "was", "we", "were", "what", "when", "where",
      "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
      "yourselves", "amp", "via", "also", "it's", "im", "ll", "re", "ve", "didn", "doesn", "isn", "wasn",
      "won", "aren", "couldn", "shouldn", "wouldn"};
  return kWords;
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool starts_url(std::string_view w) {
  return w.starts_with("http://") || w.starts_with("https://") || w.starts_with("www.");
}

}  // namespace

std::vector<std::string> tokenize_tweet(std::string_view raw, const TokenizerOptions& options) {
  std::vector<std::string> tokens;
  for (const auto& chunk : text::split(text::collapse_whitespace(raw), ' ')) {
    std::string w;
    w.reserve(chunk.size());
    for (unsigned char c : chunk) w.push_back(static_cast<char>(std::tolower(c)));
    if (w.empty() || starts_url(w)) continue;
    std::string cur;
    bool in_mention = false;
    auto flush = [&] {
      if (!cur.empty() && !in_mention && cur.size() >= options.min_token_length &&
          !(options.use_stopwords && stopwords().contains(cur))) {
        tokens.push_back(cur);
      }
      cur.clear();
      in_mention = false;
    };
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto c = static_cast<unsigned char>(w[i]);
      if (is_word_byte(c) || (c == '_' && in_mention)) {
        cur.push_back(static_cast<char>(c));
        continue;
      }
      flush();
      if (c == '@') in_mention = true;
      if (c == ':' && w.compare(i, 3, "://") == 0) break;  // embedded URL
    }
    flush();
  }
  return tokens;
}

TokenizedCorpus build_corpus(const std::vector<std::pair<std::string, std::string>>& id_text, const TokenizerOptions& options) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(id_text.size());
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& [id, t] : id_text) {
    tokenized.push_back(tokenize_tweet(t, options));
    for (const auto& tok : tokenized.back()) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> kept;
  TokenizedCorpus dropped;
  for (std::size_t d = 0; d < id_text.size(); ++d) {
    std::vector<std::string> toks;
    for (auto& tok : tokenized[d]) {
      if (counts[tok] >= options.min_count) toks.push_back(std::move(tok));
    }
    if (toks.empty()) dropped.dropped_doc_ids.push_back(id_text[d].first);
    else kept.emplace_back(id_text[d].first, std::move(toks));
  }
  if (kept.empty()) throw TopicError("empty vocabulary after preprocessing");
  TokenizedCorpus corpus = corpus_from_tokens(kept);
  corpus.dropped_doc_ids = std::move(dropped.dropped_doc_ids);
  return corpus;
}

TokenizedCorpus corpus_from_tokens(const std::vector<std::pair<std::string, std::vector<std::string>>>& docs) {
  TokenizedCorpus corpus;
  std::set<std::string> vocab;
  for (const auto& [id, toks] : docs) vocab.insert(toks.begin(), toks.end());
  if (vocab.empty()) throw TopicError("empty vocabulary");
  corpus.vocab.assign(vocab.begin(), vocab.end());
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < corpus.vocab.size(); ++i) index[corpus.vocab[i]] = static_cast<int>(i);
  std::unordered_set<std::string> seen;
  for (const auto& [id, toks] : docs) {
    if (!seen.insert(id).second) throw TopicError("duplicate document id " + id);
    if (toks.empty()) {
      corpus.dropped_doc_ids.push_back(id);
      continue;
    }
    corpus.doc_ids.push_back(id);
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(index.at(t));
    corpus.docs.push_back(std::move(ids));
  }
  return corpus;
}

void TopicModelState::check_invariants() const {
  const std::size_t k = static_cast<std::size_t>(num_topics);
  for (std::size_t d = 0; d < doc_topic.size(); ++d) {
    long sum = 0;
    for (int c : doc_topic[d]) {
      if (c < 0) throw TopicError("negative doc-topic count");
      sum += c;
    }
    if (sum != static_cast<long>(tokens[d].size())) throw TopicError(fmt::format("doc {}: topic counts do not sum to length", doc_ids[d]));
  }
  for (std::size_t t = 0; t < k; ++t) {
    long sum = 0;
    for (int c : topic_word[t]) {
      if (c < 0) throw TopicError("negative topic-word count");
      sum += c;
    }
    if (sum != topic_totals[t]) throw TopicError(fmt::format("topic {}: word counts do not sum to N_k", t));
  }
}

TopicModelState fit_lda(const TokenizedCorpus& corpus, const LdaOptions& opt, const SweepCallback& on_sweep) {
  if (opt.num_topics < 1) throw TopicError("num_topics must be at least 1");
  if (!(opt.alpha > 0.0) || !(opt.beta > 0.0)) throw TopicError("alpha and beta must be positive");
  if (corpus.vocab.empty()) throw TopicError("empty vocabulary");
  if (corpus.docs.empty()) throw TopicError("no documents");

  TopicModelState s;
  s.num_topics = opt.num_topics;
  s.alpha = opt.alpha;
  s.beta = opt.beta;
  s.seed = opt.seed;
  s.vocab = corpus.vocab;
  for (std::size_t i = 0; i < s.vocab.size(); ++i) s.word_index[s.vocab[i]] = i;
  s.doc_ids = corpus.doc_ids;
  for (std::size_t d = 0; d < s.doc_ids.size(); ++d) s.doc_index[s.doc_ids[d]] = d;
  s.tokens = corpus.docs;

  const auto k = static_cast<std::size_t>(opt.num_topics);
  const std::size_t v = s.vocab.size();
  s.doc_topic.assign(s.tokens.size(), std::vector<int>(k, 0));
  s.topic_word.assign(k, std::vector<int>(v, 0));
  s.topic_totals.assign(k, 0);
  s.assignments.resize(s.tokens.size());

  Rng rng(opt.seed);
  for (std::size_t d = 0; d < s.tokens.size(); ++d) {
    if (s.tokens[d].empty()) throw TopicError("document " + s.doc_ids[d] + " has no tokens");
    s.assignments[d].resize(s.tokens[d].size());
    for (std::size_t i = 0; i < s.tokens[d].size(); ++i) {
      const int z = static_cast<int>(rng.uniform_index(k));
      s.assignments[d][i] = z;
      ++s.doc_topic[d][static_cast<std::size_t>(z)];
      ++s.topic_word[static_cast<std::size_t>(z)][static_cast<std::size_t>(s.tokens[d][i])];
      ++s.topic_totals[static_cast<std::size_t>(z)];
    }
  }

  const double vbeta = static_cast<double>(v) * opt.beta;
  std::vector<double> cumulative(k);
  for (int sweep = 1; sweep <= opt.iterations; ++sweep) {
    for (std::size_t d = 0; d < s.tokens.size(); ++d) {
      auto& ndk = s.doc_topic[d];
      for (std::size_t i = 0; i < s.tokens[d].size(); ++i) {
        const auto w = static_cast<std::size_t>(s.tokens[d][i]);
        auto old = static_cast<std::size_t>(s.assignments[d][i]);
        --ndk[old];
        --s.topic_word[old][w];
        --s.topic_totals[old];
        double total = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
          total += (ndk[t] + opt.alpha) * (s.topic_word[t][w] + opt.beta) / (s.topic_totals[t] + vbeta);
          cumulative[t] = total;
        }
        const double u = rng.uniform01() * total;
        std::size_t z = 0;
        while (z + 1 < k && cumulative[z] <= u) ++z;
        s.assignments[d][i] = static_cast<int>(z);
        ++ndk[z];
        ++s.topic_word[z][w];
        ++s.topic_totals[z];
      }
    }
    if (on_sweep) on_sweep(sweep, s);
  }
  return s;
}

std::vector<double> doc_topic_distribution(const TopicModelState& s, const std::string& doc_id) {
  auto it = s.doc_index.find(doc_id);
  if (it == s.doc_index.end()) throw TopicError("unknown document " + doc_id);
  const auto& ndk = s.doc_topic[it->second];
  const double denom = static_cast<double>(s.tokens[it->second].size()) + s.num_topics * s.alpha;
  std::vector<double> theta(ndk.size());
  for (std::size_t t = 0; t < ndk.size(); ++t) theta[t] = (ndk[t] + s.alpha) / denom;
  return theta;
}

TopWords top_words(const TopicModelState& s, int topic_id, std::size_t n) {
  if (topic_id < 0 || topic_id >= s.num_topics) throw TopicError(fmt::format("unknown topic {}", topic_id));
  TopWords out;
  if (n > s.vocab.size()) {
    out.warnings.push_back(fmt::format("requested {} top words but vocabulary has {}; truncated", n, s.vocab.size()));
    n = s.vocab.size();
  }
  // (N_kw + beta)/(N_k + V beta) is monotone in N_kw within a topic
  const auto& row = s.topic_word[static_cast<std::size_t>(topic_id)];
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  for (std::size_t i = 0; i < n; ++i) out.words.push_back(s.vocab[order[i]]);
  return out;
}

TopicSelection load_topic_selection(const std::filesystem::path& path, int num_topics) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TopicError("cannot open topic selection " + path.string());
  TopicSelection sel;
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& [key, label] : doc.items()) {
      const int id = std::stoi(key);
      if (id < 0 || id >= num_topics) throw TopicError(fmt::format("{}: topic {} outside [0, {})", path.string(), id, num_topics));
      sel.topic_ids.insert(id);
      sel.labels[id] = label.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw TopicError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const std::invalid_argument&) {
    throw TopicError(path.string() + ": topic keys must be integers");
  }
  return sel;
}

std::map<LegislatorTopic, std::vector<std::string>> select_top_tweets(
    const TopicModelState& s, const TopicSelection& selection,
    const std::map<std::string, std::vector<std::string>>& tweets_by_legislator, double threshold, std::size_t m) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw TopicError("threshold must lie in (0, 1]");
  if (m < 1) throw TopicError("m must be at least 1");
  std::map<LegislatorTopic, std::vector<std::string>> out;
  for (const auto& [legislator, tweets] : tweets_by_legislator) {
    std::vector<std::pair<std::string, std::vector<double>>> thetas;
    for (const auto& id : tweets) {
      if (s.doc_index.contains(id)) thetas.emplace_back(id, doc_topic_distribution(s, id));
    }
    for (int topic : selection.topic_ids) {
      std::vector<std::pair<double, std::string>> passing;
      for (const auto& [id, theta] : thetas) {
        const double p = theta[static_cast<std::size_t>(topic)];
        if (p >= threshold) passing.emplace_back(p, id);
      }
      std::sort(passing.begin(), passing.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      auto& dest = out[{legislator, topic}];
      for (std::size_t i = 0; i < passing.size() && i < m; ++i) dest.push_back(passing[i].second);
    }
  }
  return out;
}

void write_topic_words(const std::filesystem::path& path, const TopicModelState& s, std::size_t n,
                       const TopicSelection* selection) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TopicError("cannot write " + path.string());
  out << "topic_id,relevant,label,top_words\n";
  for (int t = 0; t < s.num_topics; ++t) {
    const bool relevant = selection && selection->topic_ids.contains(t);
    std::string label = relevant && selection->labels.contains(t) ? selection->labels.at(t) : "";
    std::replace(label.begin(), label.end(), ',', ';');
    out << fmt::format("{},{},{},{}\n", t, relevant ? "Y" : "N", label, text::join(top_words(s, t, n).words, " "));
  }
}

void write_theta(const std::filesystem::path& path, const TopicModelState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TopicError("cannot write " + path.string());
  out << "doc_id";
  for (int t = 0; t < s.num_topics; ++t) out << ",theta_" << t;
  out << '\n';
  for (const auto& id : s.doc_ids) {
    out << id;
    for (double p : doc_topic_distribution(s, id)) out << fmt::format(",{:.8f}", p);
    out << '\n';
  }
}

}  // namespace infdecomp
