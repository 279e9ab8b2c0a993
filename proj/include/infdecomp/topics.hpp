#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace infdecomp {

struct TokenizerOptions {
  std::size_t min_token_length = 2;
  std::size_t min_count = 3;  // corpus-wide frequency floor
  bool use_stopwords = true;
};

// Lowercases, strips URLs and @mentions, keeps hashtag words without '#',
// splits on non-alphanumerics, drops short tokens and stopwords.
std::vector<std::string> tokenize_tweet(std::string_view text, const TokenizerOptions& options = {});

struct TokenizedCorpus {
  std::vector<std::string> doc_ids;
  std::vector<std::vector<int>> docs;  // word indices per document
  std::vector<std::string> vocab;      // sorted lexicographically
  std::vector<std::string> dropped_doc_ids;  // empty after preprocessing
};

// Applies tokenize_tweet and the frequency floor. Documents left without
// tokens are listed in dropped_doc_ids. Throws TopicError on an empty vocabulary.
TokenizedCorpus build_corpus(const std::vector<std::pair<std::string, std::string>>& id_text,
                             const TokenizerOptions& options = {});

// Corpus from pre-tokenized documents (no filtering).
TokenizedCorpus corpus_from_tokens(const std::vector<std::pair<std::string, std::vector<std::string>>>& docs);

struct LdaOptions {
  int num_topics = 50;
  double alpha = 0.1;
  double beta = 0.01;
  int iterations = 500;
  std::uint64_t seed = 0;
};

struct TopicModelState {
  int num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> vocab;
  std::map<std::string, std::size_t> word_index;
  std::vector<std::string> doc_ids;
  std::map<std::string, std::size_t> doc_index;
  std::vector<std::vector<int>> tokens;       // word ids per doc
  std::vector<std::vector<int>> assignments;  // topic per token
  std::vector<std::vector<int>> doc_topic;    // N_dk, docs x K
  std::vector<std::vector<int>> topic_word;   // N_kw, K x V
  std::vector<int> topic_totals;              // N_k

  // Throws TopicError if any count identity is violated.
  void check_invariants() const;
};

using SweepCallback = std::function<void(int sweep, const TopicModelState&)>;

// Collapsed Gibbs sampling with p(z = k) proportional to
// (N_dk + alpha)(N_kw + beta) / (N_k + V beta), the current token removed.
TopicModelState fit_lda(const TokenizedCorpus& corpus, const LdaOptions& options, const SweepCallback& on_sweep = {});

// theta_dk = (N_dk + alpha) / (len_d + K alpha).
std::vector<double> doc_topic_distribution(const TopicModelState& state, const std::string& doc_id);

struct TopWords {
  std::vector<std::string> words;
  std::vector<std::string> warnings;
};

// n words by descending (N_kw + beta) / (N_k + V beta); ties by vocabulary order.
TopWords top_words(const TopicModelState& state, int topic_id, std::size_t n);

struct TopicSelection {
  std::set<int> topic_ids;
  std::map<int, std::string> labels;
};

// JSON object {"<topic_id>": "<label>"}.
TopicSelection load_topic_selection(const std::filesystem::path& path, int num_topics);

using LegislatorTopic = std::pair<std::string, int>;

// For each legislator and selected topic: tweets with theta >= threshold,
// by theta descending (ties by doc id), at most m. Tweets missing from the
// model are ignored. Every (legislator, topic) key is present, possibly empty.
std::map<LegislatorTopic, std::vector<std::string>> select_top_tweets(
    const TopicModelState& state, const TopicSelection& selection,
    const std::map<std::string, std::vector<std::string>>& tweets_by_legislator, double threshold, std::size_t m);

// topic_id,relevant,label,top_words (space separated).
void write_topic_words(const std::filesystem::path& path, const TopicModelState& state, std::size_t n,
                       const TopicSelection* selection = nullptr);
// doc_id,theta_0,...,theta_{K-1}
void write_theta(const std::filesystem::path& path, const TopicModelState& state);

}  // namespace infdecomp
