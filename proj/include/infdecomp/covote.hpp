#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "infdecomp/topics.hpp"

namespace infdecomp {

enum class VotePosition { yea, nay, other };

struct VoteRecord {
  std::string legislator_id;
  std::string vote_id;
  VotePosition position = VotePosition::other;
};

// legislator -> (vote_id -> position)
using VoteTable = std::map<std::string, std::map<std::string, VotePosition>>;

// CSV with header legislator_id,vote_id,position. Positions "yea"/"nay"
// (case-insensitive, also "yes"/"no"); anything else counts as other.
// Throws CovoteError on a repeated (legislator, vote) pair.
VoteTable load_votes(const std::filesystem::path& path);
VoteTable make_vote_table(const std::vector<VoteRecord>& records);

struct Legislator {
  std::string legislator_id;
  std::string party;
  std::string state;
};

std::map<std::string, Legislator> load_legislators(const std::filesystem::path& path);

struct CovoteRate {
  double lambda = 0.0;
  int n_common = 0;
  int agreements = 0;
};

// Agreement rate over votes where both legislators cast yea or nay;
// nullopt when they share no such vote.
std::optional<CovoteRate> covote_rate(const std::map<std::string, VotePosition>& votes_i,
                                      const std::map<std::string, VotePosition>& votes_j);

// log(lambda / (1 - lambda)) after clamping lambda into [eps, 1 - eps],
// eps = 0.5 / n_common.
double logit_response(double lambda, int n_common);

using Embeddings = std::vector<std::vector<double>>;

// Linear-interpolation percentile of all pairwise cosines between the two
// sets; nullopt when either set is empty.
std::optional<double> pair_similarity(const Embeddings& emb_i, const Embeddings& emb_j, double percentile);

inline constexpr const char* kSameParty = "same_party";
inline constexpr const char* kSimUtterances = "sim_utterances";
inline constexpr const char* kSimDecompositions = "sim_decompositions";

struct CovoteObservation {
  std::string first;   // canonical order: first < second
  std::string second;
  double lambda = 0.0;
  int n_common = 0;
  double response = 0.0;
  std::map<std::string, double> features;
};

// Per (legislator, topic) embeddings of the selected texts.
using TopicEmbeddings = std::map<LegislatorTopic, Embeddings>;

struct FeatureBuildResult {
  std::vector<CovoteObservation> observations;
  std::size_t pairs_considered = 0;
  std::size_t dropped_no_common_votes = 0;
  std::size_t dropped_no_shared_topics = 0;
  std::vector<std::string> warnings;
};

// For every legislator pair: co-vote response, same-party indicator and, for
// each text view, the mean over topics (where both legislators have texts)
// of the per-topic percentile similarity. Pairs missing either similarity or
// sharing no votes are dropped and counted. Throws if no pair survives.
FeatureBuildResult build_features(const VoteTable& votes, const std::map<std::string, Legislator>& legislators,
                                  const TopicEmbeddings& utterances, const TopicEmbeddings& decompositions,
                                  double percentile);

struct LmmOptions {
  bool standardize = false;
  int starts = 3;
  std::uint64_t seed = 0;
  int max_evals = 2000;
  double log_ratio_min = -20.0;
  double log_ratio_max = 10.0;
};

struct ModelFit {
  std::vector<std::string> names;  // "(intercept)" then the features
  std::vector<double> beta;
  std::vector<double> se;
  double sigma2_a = 0.0;
  double sigma2_b = 0.0;
  double sigma2_e = 0.0;
  double loglik = 0.0;
  double bic = 0.0;
  std::size_t n_obs = 0;
  std::string observations_fingerprint;
  int evaluations = 0;

  std::size_t num_params() const { return beta.size() + 3; }
};

// Gaussian linear mixed model y = X beta + Z_a a + Z_b b + e with crossed
// legislator intercepts (slot a: first member, slot b: second member).
// Variance components are profiled via a low-rank (Woodbury) form of V.
class LmmProblem {
 public:
  LmmProblem(Eigen::VectorXd y, Eigen::MatrixXd x, std::vector<int> slot_a, std::vector<int> slot_b, int num_groups);

  static LmmProblem from_observations(const std::vector<CovoteObservation>& observations,
                                      const std::vector<std::string>& feature_names, bool standardize);

  struct Profile {
    double loglik = 0.0;  // ML log-likelihood with sigma2_e profiled out
    Eigen::VectorXd beta;
    Eigen::MatrixXd xtvx;  // X' H^-1 X
    double sigma2_e = 0.0;
  };

  // gamma_* = sigma2_* / sigma2_e; zero allowed.
  Profile profile(double gamma_a, double gamma_b) const;

  // Full ML log-likelihood at explicit variance components, beta by GLS.
  double loglik(double sigma2_a, double sigma2_b, double sigma2_e) const;

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<int>& slot_a() const { return slot_a_; }
  const std::vector<int>& slot_b() const { return slot_b_; }
  int num_groups() const { return groups_; }
  std::size_t n() const { return static_cast<std::size_t>(y_.size()); }

 private:
  struct Quadratics {
    Eigen::MatrixXd xtvx;
    Eigen::VectorXd xtvy;
    double ytvy;
    double logdet;
  };
  Quadratics quadratics(double gamma_a, double gamma_b) const;

  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
  std::vector<int> slot_a_;
  std::vector<int> slot_b_;
  int groups_;
  Eigen::MatrixXd ztz_, ztx_, xtx_;
  Eigen::VectorXd zty_, xty_;
  double yty_;
};

// Maximum-likelihood fit (Nelder-Mead over log variance ratios, multi-start).
// Throws CovoteError naming collinear columns or on non-convergence.
ModelFit fit_lmm(const std::vector<CovoteObservation>& observations, const std::vector<std::string>& feature_names,
                 const LmmOptions& options = {});

// bic(reduced) - bic(full); positive favors the full model.
double bic_compare(const ModelFit& full, const ModelFit& reduced);

struct CoefficientRow {
  std::string covariate;
  double beta = 0.0;
  double se = 0.0;
  std::optional<double> delta_bic;
};

// One row per coefficient of `full`; each feature's delta BIC comes from
// refitting without it.
std::vector<CoefficientRow> coefficient_table(const std::vector<CovoteObservation>& observations,
                                              const std::vector<std::string>& feature_names, const LmmOptions& options);

// CSV columns covariate,beta,se,delta_bic (4 decimals).
void write_coefficient_table(const std::filesystem::path& path, const std::vector<CoefficientRow>& rows);

// "Sim. Decompositions  7.4700 (0.1700)  2.0k" style line.
std::string format_coefficient_row(const CoefficientRow& row);

}  // namespace infdecomp
