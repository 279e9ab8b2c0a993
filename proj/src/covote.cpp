#include "infdecomp/covote.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "infdecomp/embedder.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/numeric.hpp"
#include "infdecomp/text.hpp"

namespace infdecomp {
namespace {

VotePosition parse_position(std::string_view raw) {
  const std::string p = text::to_lower(text::trim(raw));
  if (p == "yea" || p == "yes" || p == "y" || p == "aye") return VotePosition::yea;
  if (p == "nay" || p == "no" || p == "n") return VotePosition::nay;
  return VotePosition::other;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name, const std::filesystem::path& path) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw CovoteError(fmt::format("{}: missing column {}", path.string(), name));
  }
};

Csv read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CovoteError("cannot open " + path.string());
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto cells = text::split(line, ',');
    for (auto& c : cells) c = text::trim(c);
    if (first) {
      csv.header = std::move(cells);
      first = false;
    } else {
      csv.rows.push_back(std::move(cells));
    }
  }
  return csv;
}

std::optional<double> topic_mean(const std::string& a, const std::string& b, const TopicEmbeddings& emb,
                                 const std::set<int>& topics, double percentile) {
  std::vector<double> sims;
  for (int t : topics) {
    auto ia = emb.find({a, t});
    auto ib = emb.find({b, t});
    if (ia == emb.end() || ib == emb.end()) continue;
    if (auto s = pair_similarity(ia->second, ib->second, percentile)) sims.push_back(*s);
  }
  if (sims.empty()) return std::nullopt;
  return exact_sum(sims) / static_cast<double>(sims.size());
}

}  // namespace

VoteTable make_vote_table(const std::vector<VoteRecord>& records) {
  VoteTable table;
  for (const auto& r : records) {
    auto [it, inserted] = table[r.legislator_id].emplace(r.vote_id, r.position);
    if (!inserted) throw CovoteError(fmt::format("duplicate vote record ({}, {})", r.legislator_id, r.vote_id));
  }
  return table;
}

VoteTable load_votes(const std::filesystem::path& path) {
  const Csv csv = read_csv(path);
  const std::size_t cl = csv.column("legislator_id", path);
  const std::size_t cv = csv.column("vote_id", path);
  const std::size_t cp = csv.column("position", path);
  std::vector<VoteRecord> records;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() <= std::max({cl, cv, cp})) throw CovoteError(fmt::format("{} row {}: too few columns", path.string(), r + 2));
    records.push_back({row[cl], row[cv], parse_position(row[cp])});
  }
  return make_vote_table(records);
}

std::map<std::string, Legislator> load_legislators(const std::filesystem::path& path) {
  const Csv csv = read_csv(path);
  const std::size_t ci = csv.column("legislator_id", path);
  const std::size_t cp = csv.column("party", path);
  const std::size_t cs = csv.column("state", path);
  std::map<std::string, Legislator> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() <= std::max({ci, cp, cs})) throw CovoteError(fmt::format("{} row {}: too few columns", path.string(), r + 2));
    if (!out.emplace(row[ci], Legislator{row[ci], row[cp], row[cs]}).second)
      throw CovoteError(fmt::format("{}: duplicate legislator {}", path.string(), row[ci]));
  }
  return out;
}

std::optional<CovoteRate> covote_rate(const std::map<std::string, VotePosition>& votes_i,
                                      const std::map<std::string, VotePosition>& votes_j) {
  CovoteRate rate;
  auto it = votes_i.begin();
  auto jt = votes_j.begin();
  while (it != votes_i.end() && jt != votes_j.end()) {
    if (it->first < jt->first) {
      ++it;
    } else if (jt->first < it->first) {
      ++jt;
    } else {
      if (it->second != VotePosition::other && jt->second != VotePosition::other) {
        ++rate.n_common;
        if (it->second == jt->second) ++rate.agreements;
      }
      ++it;
      ++jt;
    }
  }
  if (rate.n_common == 0) return std::nullopt;
  rate.lambda = static_cast<double>(rate.agreements) / static_cast<double>(rate.n_common);
  return rate;
}

double logit_response(double lambda, int n_common) {
  if (n_common < 1) throw CovoteError("logit_response: n_common must be at least 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw CovoteError("logit_response: lambda must lie in [0, 1]");
  const double eps = 0.5 / static_cast<double>(n_common);
  const double clamped = std::clamp(lambda, eps, 1.0 - eps);
  return std::log(clamped / (1.0 - clamped));
}

std::optional<double> pair_similarity(const Embeddings& emb_i, const Embeddings& emb_j, double p) {
  if (!(p >= 0.0 && p <= 100.0)) throw CovoteError("pair_similarity: percentile must lie in [0, 100]");
  if (emb_i.empty() || emb_j.empty()) return std::nullopt;
  std::vector<double> sims;
  sims.reserve(emb_i.size() * emb_j.size());
  for (const auto& a : emb_i) {
    for (const auto& b : emb_j) sims.push_back(cosine(a, b));
  }
  return percentile(std::move(sims), p);
}

FeatureBuildResult build_features(const VoteTable& votes, const std::map<std::string, Legislator>& legislators,
                                  const TopicEmbeddings& utterances, const TopicEmbeddings& decompositions,
                                  double percentile) {
  std::set<int> topics;
  for (const auto& [key, _] : utterances) topics.insert(key.second);
  for (const auto& [key, _] : decompositions) topics.insert(key.second);

  FeatureBuildResult out;
  std::vector<std::string> ids;
  for (const auto& [id, _] : legislators) {
    if (votes.contains(id)) ids.push_back(id);
    else out.warnings.push_back(fmt::format("legislator {} has no vote records", id));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      ++out.pairs_considered;
      const std::string& a = ids[i];
      const std::string& b = ids[j];
      const auto rate = covote_rate(votes.at(a), votes.at(b));
      if (!rate) {
        ++out.dropped_no_common_votes;
        out.warnings.push_back(fmt::format("pair ({}, {}) shares no yea/nay votes; excluded", a, b));
        continue;
      }
      const auto su = topic_mean(a, b, utterances, topics, percentile);
      const auto sd = topic_mean(a, b, decompositions, topics, percentile);
      if (!su || !sd) {
        ++out.dropped_no_shared_topics;
        continue;
      }
      CovoteObservation obs{a, b, rate->lambda, rate->n_common, logit_response(rate->lambda, rate->n_common), {}};
      obs.features[kSameParty] = legislators.at(a).party == legislators.at(b).party ? 1.0 : 0.0;
      obs.features[kSimUtterances] = *su;
      obs.features[kSimDecompositions] = *sd;
      out.observations.push_back(std::move(obs));
    }
  }
  if (out.dropped_no_shared_topics > 0) {
    out.warnings.push_back(fmt::format("{} pairs dropped: no topic with texts from both legislators", out.dropped_no_shared_topics));
  }
  if (out.observations.empty()) throw CovoteError("build_features: no legislator pair has both votes and text features");
  return out;
}

}  // namespace infdecomp
