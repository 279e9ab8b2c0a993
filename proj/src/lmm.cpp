#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "infdecomp/covote.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/hashing.hpp"
#include "infdecomp/nelder_mead.hpp"
#include "infdecomp/rng.hpp"
#include "infdecomp/text.hpp"

namespace infdecomp {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)

// Columns of x that lie in the span of the columns before them.
std::vector<std::size_t> dependent_columns(const Eigen::MatrixXd& x) {
  std::vector<std::size_t> dependent;
  std::vector<Eigen::Index> kept;
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::MatrixXd trial(x.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
    for (std::size_t k = 0; k < kept.size(); ++k) trial.col(static_cast<Eigen::Index>(k)) = x.col(kept[k]);
    trial.col(trial.cols() - 1) = x.col(j);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(1e-10 * scale);
    if (qr.rank() == trial.cols()) kept.push_back(j);
    else dependent.push_back(static_cast<std::size_t>(j));
  }
  return dependent;
}

std::string observations_fingerprint(const std::vector<CovoteObservation>& obs) {
  std::string buf;
  for (const auto& o : obs) buf += fmt::format("{}\x1f{}\x1f{}\n", o.first, o.second, o.response);
  return sha256_hex(buf);
}

}  // namespace

LmmProblem::LmmProblem(Eigen::VectorXd y, Eigen::MatrixXd x, std::vector<int> slot_a, std::vector<int> slot_b, int num_groups)
    : y_(std::move(y)), x_(std::move(x)), slot_a_(std::move(slot_a)), slot_b_(std::move(slot_b)), groups_(num_groups) {
  const auto n = y_.size();
  if (x_.rows() != n || static_cast<Eigen::Index>(slot_a_.size()) != n || static_cast<Eigen::Index>(slot_b_.size()) != n)
    throw CovoteError("LmmProblem: inconsistent dimensions");
  if (n <= x_.cols()) throw CovoteError(fmt::format("LmmProblem: {} observations for {} fixed effects", n, x_.cols()));
  const Eigen::Index q = 2 * static_cast<Eigen::Index>(groups_);
  ztz_ = Eigen::MatrixXd::Zero(q, q);
  ztx_ = Eigen::MatrixXd::Zero(q, x_.cols());
  zty_ = Eigen::VectorXd::Zero(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ca = slot_a_[static_cast<std::size_t>(i)];
    const int cb = groups_ + slot_b_[static_cast<std::size_t>(i)];
    if (ca < 0 || ca >= groups_ || cb < groups_ || cb >= 2 * groups_) throw CovoteError("LmmProblem: group index out of range");
    ztz_(ca, ca) += 1.0;
    ztz_(cb, cb) += 1.0;
    ztz_(ca, cb) += 1.0;
    ztz_(cb, ca) += 1.0;
    ztx_.row(ca) += x_.row(i);
    ztx_.row(cb) += x_.row(i);
    zty_(ca) += y_(i);
    zty_(cb) += y_(i);
  }
  xtx_ = x_.transpose() * x_;
  xty_ = x_.transpose() * y_;
  yty_ = y_.squaredNorm();
}

LmmProblem LmmProblem::from_observations(const std::vector<CovoteObservation>& obs, const std::vector<std::string>& features,
                                         bool standardize) {
  if (obs.empty()) throw CovoteError("fit_lmm: no observations");
  std::map<std::string, int> index;
  std::set<std::string> in_a, in_b;
  for (const auto& o : obs) {
    index.emplace(o.first, 0);
    index.emplace(o.second, 0);
    in_a.insert(o.first);
    in_b.insert(o.second);
  }
  if (in_a.size() < 2 || in_b.size() < 2)
    throw CovoteError("fit_lmm: need at least two distinct legislators in each random-effect slot");
  int next = 0;
  for (auto& [id, idx] : index) idx = next++;

  const auto n = static_cast<Eigen::Index>(obs.size());
  const auto p = static_cast<Eigen::Index>(features.size()) + 1;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, p);
  std::vector<int> sa, sb;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    if (!std::isfinite(o.response)) throw CovoteError(fmt::format("pair ({}, {}): non-finite response", o.first, o.second));
    y(i) = o.response;
    x(i, 0) = 1.0;
    for (std::size_t f = 0; f < features.size(); ++f) {
      auto it = o.features.find(features[f]);
      if (it == o.features.end()) throw CovoteError(fmt::format("pair ({}, {}) lacks feature {}", o.first, o.second, features[f]));
      x(i, static_cast<Eigen::Index>(f) + 1) = it->second;
    }
    sa.push_back(index.at(o.first));
    sb.push_back(index.at(o.second));
  }

  if (const auto dep = dependent_columns(x); !dep.empty()) {
    std::vector<std::string> names;
    for (auto j : dep) names.push_back(j == 0 ? "(intercept)" : features[j - 1]);
    throw CovoteError("fit_lmm: singular design; collinear columns: " + text::join(names, ", "));
  }
  if (standardize) {
    for (Eigen::Index j = 1; j < p; ++j) {
      const double mean = x.col(j).mean();
      const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1));
      x.col(j) = (x.col(j).array() - mean) / sd;
    }
  }
  return LmmProblem(std::move(y), std::move(x), std::move(sa), std::move(sb), next);
}

LmmProblem::Quadratics LmmProblem::quadratics(double gamma_a, double gamma_b) const {
  if (!(gamma_a >= 0.0) || !(gamma_b >= 0.0)) throw CovoteError("variance ratios must be non-negative");
  // H = I + Z G^2 Z'. With Zs = Z G and M = I + Zs'Zs:
  //   u' H^-1 v = u'v - (Zs'u)' M^-1 (Zs'v),   log|H| = log|M|.
  const Eigen::Index q = ztz_.rows();
  Eigen::VectorXd g(q);
  g.head(groups_).setConstant(std::sqrt(gamma_a));
  g.tail(groups_).setConstant(std::sqrt(gamma_b));
  Eigen::MatrixXd m = g.asDiagonal() * ztz_ * g.asDiagonal();
  m.diagonal().array() += 1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw CovoteError("random-effect system is not positive definite");
  const Eigen::MatrixXd gzx = g.asDiagonal() * ztx_;
  const Eigen::VectorXd gzy = g.asDiagonal() * zty_;
  const Eigen::MatrixXd solved_x = llt.solve(gzx);
  const Eigen::VectorXd solved_y = llt.solve(gzy);

  Quadratics out;
  out.xtvx = xtx_ - gzx.transpose() * solved_x;
  out.xtvy = xty_ - gzx.transpose() * solved_y;
  out.ytvy = yty_ - gzy.dot(solved_y);
  const Eigen::MatrixXd l = llt.matrixL();
  out.logdet = 2.0 * l.diagonal().array().log().sum();
  return out;
}

LmmProblem::Profile LmmProblem::profile(double gamma_a, double gamma_b) const {
  const Quadratics qd = quadratics(gamma_a, gamma_b);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(qd.xtvx);
  if (ldlt.info() != Eigen::Success) throw CovoteError("GLS normal equations are singular");
  Profile p;
  p.beta = ldlt.solve(qd.xtvy);
  p.xtvx = qd.xtvx;
  const double rss = std::max(qd.ytvy - p.beta.dot(qd.xtvy), 0.0);
  const double n = static_cast<double>(y_.size());
  p.sigma2_e = rss / n;
  if (!(p.sigma2_e > 0.0)) throw CovoteError("residual variance collapsed to zero");
  p.loglik = -0.5 * (n * (kLog2Pi + std::log(p.sigma2_e)) + qd.logdet + n);
  return p;
}

double LmmProblem::loglik(double sigma2_a, double sigma2_b, double sigma2_e) const {
  if (!(sigma2_e > 0.0)) throw CovoteError("sigma2_e must be positive");
  const Quadratics qd = quadratics(sigma2_a / sigma2_e, sigma2_b / sigma2_e);
  const Eigen::VectorXd beta = qd.xtvx.ldlt().solve(qd.xtvy);
  const double rss = std::max(qd.ytvy - beta.dot(qd.xtvy), 0.0);
  const double n = static_cast<double>(y_.size());
  return -0.5 * (n * (kLog2Pi + std::log(sigma2_e)) + qd.logdet + rss / sigma2_e);
}

ModelFit fit_lmm(const std::vector<CovoteObservation>& observations, const std::vector<std::string>& feature_names,
                 const LmmOptions& opt) {
  const LmmProblem problem = LmmProblem::from_observations(observations, feature_names, opt.standardize);
  auto ratio = [&](double t) { return std::exp(std::clamp(t, opt.log_ratio_min, opt.log_ratio_max)); };
  auto objective = [&](const std::vector<double>& t) { return -problem.profile(ratio(t[0]), ratio(t[1])).loglik; };

  Rng rng(opt.seed);
  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals;
  std::optional<NelderMeadResult> best;
  int evaluations = 0;
  std::vector<std::string> trace;
  for (int s = 0; s < std::max(1, opt.starts); ++s) {
    std::vector<double> x0 = s == 0 ? std::vector<double>{0.0, 0.0}
                                    : std::vector<double>{rng.uniform(-4.0, 2.0), rng.uniform(-4.0, 2.0)};
    auto r = nelder_mead(objective, x0, nm);
    evaluations += r.evaluations;
    trace.push_back(fmt::format("start {} at ({:.3f}, {:.3f}): f = {:.10g} after {} evals, converged = {}", s, x0[0], x0[1],
                                r.fx, r.evaluations, r.converged));
    if (r.converged && (!best || r.fx < best->fx)) best = std::move(r);
  }
  if (!best) throw CovoteError("fit_lmm: Nelder-Mead did not converge from any start\n" + text::join(trace, "\n"));

  double ga = ratio(best->x[0]);
  double gb = ratio(best->x[1]);
  double best_f = best->fx;
  // Log-ratio parameters cannot reach zero; compare against the boundary.
  for (auto [ca, cb] : {std::pair{0.0, gb}, std::pair{ga, 0.0}, std::pair{0.0, 0.0}}) {
    const double f = -problem.profile(ca, cb).loglik;
    ++evaluations;
    if (f <= best_f) {
      best_f = f;
      ga = ca;
      gb = cb;
    }
  }

  const auto prof = problem.profile(ga, gb);
  ModelFit fit;
  fit.names.push_back("(intercept)");
  fit.names.insert(fit.names.end(), feature_names.begin(), feature_names.end());
  const Eigen::MatrixXd cov = prof.sigma2_e * prof.xtvx.inverse();
  for (Eigen::Index j = 0; j < prof.beta.size(); ++j) {
    fit.beta.push_back(prof.beta(j));
    fit.se.push_back(std::sqrt(std::max(cov(j, j), 0.0)));
  }
  fit.sigma2_e = prof.sigma2_e;
  fit.sigma2_a = ga * prof.sigma2_e;
  fit.sigma2_b = gb * prof.sigma2_e;
  fit.loglik = prof.loglik;
  fit.n_obs = problem.n();
  fit.bic = static_cast<double>(fit.num_params()) * std::log(static_cast<double>(fit.n_obs)) - 2.0 * fit.loglik;
  fit.observations_fingerprint = observations_fingerprint(observations);
  fit.evaluations = evaluations;
  return fit;
}

double bic_compare(const ModelFit& full, const ModelFit& reduced) {
  if (full.n_obs != reduced.n_obs || full.observations_fingerprint != reduced.observations_fingerprint)
    throw CovoteError("bic_compare: models were fitted on different observations");
  for (const auto& name : reduced.names) {
    if (std::find(full.names.begin(), full.names.end(), name) == full.names.end())
      throw CovoteError("bic_compare: reduced model covariate " + name + " is not in the full model");
  }
  return reduced.bic - full.bic;
}

std::vector<CoefficientRow> coefficient_table(const std::vector<CovoteObservation>& observations,
                                              const std::vector<std::string>& feature_names, const LmmOptions& options) {
  const ModelFit full = fit_lmm(observations, feature_names, options);
  std::vector<CoefficientRow> rows;
  rows.push_back({full.names[0], full.beta[0], full.se[0], std::nullopt});
  for (std::size_t f = 0; f < feature_names.size(); ++f) {
    std::vector<std::string> reduced_names;
    for (std::size_t g = 0; g < feature_names.size(); ++g) {
      if (g != f) reduced_names.push_back(feature_names[g]);
    }
    const ModelFit reduced = fit_lmm(observations, reduced_names, options);
    rows.push_back({feature_names[f], full.beta[f + 1], full.se[f + 1], bic_compare(full, reduced)});
  }
  return rows;
}

void write_coefficient_table(const std::filesystem::path& path, const std::vector<CoefficientRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CovoteError("cannot write " + path.string());
  out << "covariate,beta,se,delta_bic\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{:.4f},{:.4f},{}\n", r.covariate, r.beta, r.se,
                       r.delta_bic ? fmt::format("{:.4f}", *r.delta_bic) : std::string("--"));
  }
}

std::string format_coefficient_row(const CoefficientRow& row) {
  static const std::map<std::string, std::string> kDisplay = {{kSameParty, "Sim. Party"},
                                                              {kSimUtterances, "Sim. Utterances"},
                                                              {kSimDecompositions, "Sim. Decompositions"}};
  const auto it = kDisplay.find(row.covariate);
  const std::string name = it == kDisplay.end() ? row.covariate : it->second;
  std::string delta = "--";
  if (row.delta_bic) {
    delta = std::fabs(*row.delta_bic) >= 1000.0 ? fmt::format("{:.1f}k", *row.delta_bic / 1000.0)
                                                 : fmt::format("{:.2f}", *row.delta_bic);
  }
  return fmt::format("{:<22} {:.4f} ({:.4f})  {}", name, row.beta, row.se, delta);
}

}  // namespace infdecomp
