#include "infdecomp/simeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "infdecomp/error.hpp"
#include "infdecomp/text.hpp"
#include "json.hpp"

namespace infdecomp {
namespace {

using nlohmann::json;

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != text::trim(s).size() && used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw MetricError(fmt::format("{}: not a number: \"{}\"", where, s));
  }
}

void check_gold(const StsDataset& ds, const StsPair& p, std::size_t line) {
  if (!std::isfinite(p.gold)) throw MetricError(fmt::format("{} record {}: non-finite gold value", ds.name, line));
  if (ds.task == StsTask::paraphrase && p.gold != 0.0 && p.gold != 1.0)
    throw MetricError(fmt::format("{} record {}: paraphrase label must be 0 or 1", ds.name, line));
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> pred, std::span<const double> gold) {
  if (pred.size() != gold.size()) throw MetricError("spearman_rho: length mismatch");
  if (pred.size() < 2) throw MetricError("spearman_rho: need at least two items");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(gold[i])) throw MetricError("spearman_rho: non-finite input");
  }
  const auto rx = average_ranks(pred);
  const auto ry = average_ranks(gold);
  const double n = static_cast<double>(rx.size());
  const double mean = (n + 1.0) / 2.0;  // average ranks always sum to n(n+1)/2
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw MetricError("spearman_rho: undefined correlation (constant input)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double average_precision(std::span<const double> pred, std::span<const int> labels) {
  if (pred.size() != labels.size()) throw MetricError("average_precision: length mismatch");
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw MetricError("average_precision: labels must be 0 or 1");
    if (!std::isfinite(pred[i])) throw MetricError("average_precision: non-finite score");
    positives += static_cast<std::size_t>(labels[i]);
  }
  if (positives == 0) throw MetricError("average_precision: no positive labels");
  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pred[a] > pred[b]; });
  double total = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]] == 1) {
      ++hits;
      total += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return total / static_cast<double>(positives);
}

StsDataset load_sts_dataset(const std::filesystem::path& path, std::string name, StsTask task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetricError("cannot open STS dataset " + path.string());
  StsDataset ds{std::move(name), task, {}};
  const std::string where = path.string();
  std::string line;
  if (path.extension() == ".jsonl") {
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        const json rec = json::parse(line);
        StsPair p{rec.at("text_a").get<std::string>(), rec.at("text_b").get<std::string>(), 0.0};
        if (rec.contains("score")) p.gold = rec["score"].get<double>();
        else p.gold = rec.at("label").get<double>();
        check_gold(ds, p, line_no);
        ds.pairs.push_back(std::move(p));
      } catch (const json::exception& e) {
        throw MetricError(fmt::format("{} line {}: {}", where, line_no, e.what()));
      }
    }
    return ds;
  }

  if (!std::getline(in, line)) throw MetricError(where + ": empty dataset");
  const auto header = text::split(text::trim(line), '\t');
  auto column = [&](std::initializer_list<std::string_view> names) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      for (auto n : names) {
        if (text::trim(header[i]) == n) return i;
      }
    }
    throw MetricError(fmt::format("{}: missing column {}", where, *names.begin()));
  };
  const std::size_t ca = column({"text_a"});
  const std::size_t cb = column({"text_b"});
  const std::size_t cg = column({"score", "label", "gold"});
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line, '\t');
    if (cells.size() <= std::max({ca, cb, cg})) throw MetricError(fmt::format("{} line {}: too few columns", where, line_no));
    StsPair p{cells[ca], cells[cb], parse_number(cells[cg], fmt::format("{} line {}", where, line_no))};
    check_gold(ds, p, line_no);
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

std::string_view to_string(StsMode m) { return m == StsMode::baseline ? "baseline" : "augmented"; }

std::string sts_item_id(const std::string& dataset, std::size_t pair_index, char side) {
  return fmt::format("{}:{}:{}", dataset, pair_index, side);
}

CorpusView sts_items_view(const std::vector<StsDataset>& datasets) {
  CorpusView v{ViewKind::comments, {}};
  for (const auto& ds : datasets) {
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
      const auto ida = sts_item_id(ds.name, i, 'a');
      const auto idb = sts_item_id(ds.name, i, 'b');
      v.items.push_back({ida, text::normalize(ds.pairs[i].text_a), ida});
      v.items.push_back({idb, text::normalize(ds.pairs[i].text_b), idb});
    }
  }
  return v;
}

std::vector<double> score_pairs(const StsDataset& ds, StsMode mode, EmbeddingProvider& provider, EmbeddingCache& cache,
                                const GenerationLookup* generations, GenerationAggregate aggregate) {
  std::vector<std::string> texts;
  texts.reserve(ds.pairs.size() * 2);
  for (const auto& p : ds.pairs) {
    texts.push_back(p.text_a);
    texts.push_back(p.text_b);
  }
  const auto base = embed_batch(texts, provider, cache);
  std::vector<double> scores(ds.pairs.size());
  if (mode == StsMode::baseline) {
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) scores[i] = cosine(base[2 * i].values, base[2 * i + 1].values);
    return scores;
  }

  if (!generations) throw MetricError("augmented mode requires decompositions");
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    for (char side : {'a', 'b'}) {
      auto id = sts_item_id(ds.name, i, side);
      if (!generations->contains(id)) missing.push_back(std::move(id));
    }
  }
  if (!missing.empty()) {
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    std::vector<std::string> head(missing.begin(), missing.begin() + static_cast<std::ptrdiff_t>(shown));
    throw MetricError(fmt::format("{}: missing decompositions for {} items: {}{}", ds.name, missing.size(),
                                  text::join(head, ", "), missing.size() > shown ? ", ..." : ""));
  }

  std::vector<AugmentedRepresentation> reps;
  reps.reserve(base.size());
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    for (char side : {'a', 'b'}) {
      const auto& gens = generations->at(sts_item_id(ds.name, i, side));
      const auto& b = base[2 * i + (side == 'a' ? 0 : 1)];
      reps.push_back(augment(b, gens.empty() ? std::vector<EmbeddingVector>{} : embed_batch(gens, provider, cache), aggregate));
    }
  }
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) scores[i] = augmented_cosine(reps[2 * i], reps[2 * i + 1]);
  return scores;
}

StsReport run_sts_benchmark(const std::vector<StsDataset>& datasets, StsMode mode, EmbeddingProvider& provider,
                            EmbeddingCache& cache, const GenerationLookup* generations, GenerationAggregate aggregate) {
  StsReport report{provider.id(), {}};
  for (const auto& ds : datasets) {
    const auto scores = score_pairs(ds, mode, provider, cache, generations, aggregate);
    ReportRow row{ds.name, std::string(to_string(mode)), "", 0.0, ds.pairs.size()};
    if (ds.task == StsTask::similarity) {
      std::vector<double> gold;
      for (const auto& p : ds.pairs) gold.push_back(p.gold);
      row.metric = "spearman";
      try {
        row.value = spearman_rho(scores, gold);
      } catch (const MetricError& e) {
        throw MetricError(fmt::format("{}: {}", ds.name, e.what()));
      }
    } else {
      std::vector<int> labels;
      for (const auto& p : ds.pairs) labels.push_back(static_cast<int>(p.gold));
      row.metric = "average_precision";
      try {
        row.value = average_precision(scores, labels);
      } catch (const MetricError& e) {
        throw MetricError(fmt::format("{}: {}", ds.name, e.what()));
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MetricError("cannot write " + path.string());
  out << "dataset,mode,metric,value,n_pairs\n";
  for (const auto& r : rows) out << fmt::format("{},{},{},{:.6f},{}\n", r.dataset, r.mode, r.metric, r.value, r.n_pairs);
}

std::string format_comparison_table(const StsReport& baseline, const StsReport& augmented) {
  std::string out = fmt::format("{:<16} {:>9}    {:>9}\n", "dataset", "baseline", "augmented");
  for (const auto& b : baseline.rows) {
    auto it = std::find_if(augmented.rows.begin(), augmented.rows.end(),
                           [&](const ReportRow& a) { return a.dataset == b.dataset && a.metric == b.metric; });
    if (it == augmented.rows.end()) continue;
    out += fmt::format("{:<16} {:>9.2f} -> {:>9.2f}\n", b.dataset, 100.0 * b.value, 100.0 * it->value);
  }
  return out;
}

}  // namespace infdecomp
