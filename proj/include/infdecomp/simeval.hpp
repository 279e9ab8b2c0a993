#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "infdecomp/corpus.hpp"
#include "infdecomp/embedder.hpp"

namespace infdecomp {

// Pearson correlation of average ranks. Throws MetricError for fewer than two
// items, length mismatch, or a constant side.
double spearman_rho(std::span<const double> pred, std::span<const double> gold);

// Average ranks (1-based, ties share the mean rank).
std::vector<double> average_ranks(std::span<const double> values);

// Ranks by score descending (ties keep input order) and averages precision@k
// over the positive positions. Throws MetricError without positives.
double average_precision(std::span<const double> pred, std::span<const int> labels);

enum class StsTask { similarity, paraphrase };

struct StsPair {
  std::string text_a;
  std::string text_b;
  double gold = 0.0;  // similarity score, or 0/1 label
};

struct StsDataset {
  std::string name;
  StsTask task = StsTask::similarity;
  std::vector<StsPair> pairs;
};

// Reads text_a/text_b/score (or label) from a headed TSV or from JSONL,
// chosen by file extension (.tsv or .jsonl).
StsDataset load_sts_dataset(const std::filesystem::path& path, std::string name, StsTask task);

enum class StsMode { baseline, augmented };
std::string_view to_string(StsMode m);

struct ReportRow {
  std::string dataset;
  std::string mode;
  std::string metric;
  double value = 0.0;
  std::size_t n_pairs = 0;
};

struct StsReport {
  std::string provider_id;
  std::vector<ReportRow> rows;
};

// Item id of one side of a pair, "<dataset>:<pair index>:a|b".
std::string sts_item_id(const std::string& dataset, std::size_t pair_index, char side);

// Every pair side as a comments-kind view, for decomposition.
CorpusView sts_items_view(const std::vector<StsDataset>& datasets);

using GenerationLookup = std::map<std::string, std::vector<std::string>>;

// Scores every dataset with cosine (baseline) or augmented cosine. Augmented
// mode reads generations from `generations` (item id -> list; an empty list
// falls back to the base embedding) and throws listing missing ids.
StsReport run_sts_benchmark(const std::vector<StsDataset>& datasets, StsMode mode, EmbeddingProvider& provider,
                            EmbeddingCache& cache, const GenerationLookup* generations = nullptr,
                            GenerationAggregate aggregate = GenerationAggregate::mean);

// Per-pair predicted similarities, in pair order (exposed for diagnostics and tests).
std::vector<double> score_pairs(const StsDataset& dataset, StsMode mode, EmbeddingProvider& provider,
                                EmbeddingCache& cache, const GenerationLookup* generations,
                                GenerationAggregate aggregate = GenerationAggregate::mean);

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

// Rows such as "Twitter-PC  86.40 -> 88.17" (metric x100, two decimals).
std::string format_comparison_table(const StsReport& baseline, const StsReport& augmented);

}  // namespace infdecomp
