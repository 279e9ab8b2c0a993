#pragma once

// Definitional reference implementations shared by the unit and acceptance
// tests. Written for clarity over speed.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "infdecomp/cluster.hpp"
#include "infdecomp/covote.hpp"

namespace oracle {

using infdecomp::LmmProblem;
using infdecomp::Matrix;

// Rank by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<long double> count_ranks(const std::vector<double>& v) {
  std::vector<long double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    long double less = 0, eq = 0;
    for (double x : v) {
      less += x < v[i];
      eq += x == v[i];
    }
    r[i] = 1 + less + (eq - 1) / 2;
  }
  return r;
}

inline double pearson_oracle(const std::vector<long double>& x, const std::vector<long double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline double spearman_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson_oracle(count_ranks(a), count_ranks(b));
}

// Position of item i: items with a higher score, or an equal score and a
// lower index, come first.
inline double ap_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  const std::size_t n = s.size();
  auto rank = [&](std::size_t i) {
    std::size_t r = 1;
    for (std::size_t j = 0; j < n; ++j) r += (s[j] > s[i]) || (s[j] == s[i] && j < i);
    return r;
  };
  long double total = 0, pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!y[i]) continue;
    ++pos;
    const std::size_t ri = rank(i);
    long double hits = 0;
    for (std::size_t j = 0; j < n; ++j) hits += y[j] && rank(j) <= ri;
    total += hits / ri;
  }
  return static_cast<double>(total / pos);
}

inline double dist(const Matrix& x, int i, int j) { return (x.row(i) - x.row(j)).norm(); }

// Every pair of points, straight from the silhouette definition.
inline double silhouette_oracle(const Matrix& x, const std::vector<int>& lab) {
  const int n = static_cast<int>(x.rows());
  std::set<int> ks(lab.begin(), lab.end());
  long double total = 0;
  for (int i = 0; i < n; ++i) {
    std::map<int, std::pair<long double, int>> acc;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      acc[lab[j]].first += dist(x, i, j);
      acc[lab[j]].second += 1;
    }
    if (acc[lab[i]].second == 0) continue;  // singleton scores 0
    const long double a = acc[lab[i]].first / acc[lab[i]].second;
    long double b = INFINITY;
    for (int k : ks) {
      if (k == lab[i]) continue;
      b = std::min(b, acc[k].first / acc[k].second);
    }
    const long double m = std::max(a, b);
    total += m == 0 ? 0 : (b - a) / m;
  }
  return static_cast<double>(total / n);
}

inline Matrix means_of(const Matrix& x, const std::vector<int>& lab, const std::vector<int>& ks) {
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(ks.size()), x.cols());
  for (std::size_t k = 0; k < ks.size(); ++k) {
    int cnt = 0;
    for (int i = 0; i < x.rows(); ++i)
      if (lab[i] == ks[k]) {
        c.row(static_cast<Eigen::Index>(k)) += x.row(i);
        ++cnt;
      }
    c.row(static_cast<Eigen::Index>(k)) /= cnt;
  }
  return c;
}

inline std::vector<int> distinct(const std::vector<int>& lab) {
  std::set<int> s(lab.begin(), lab.end());
  return {s.begin(), s.end()};
}

inline double ch_oracle(const Matrix& x, const std::vector<int>& lab) {
  const auto ks = distinct(lab);
  const Matrix c = means_of(x, lab, ks);
  const Eigen::RowVectorXd g = x.colwise().mean();
  long double B = 0, W = 0;
  for (int i = 0; i < x.rows(); ++i) {
    const auto k = std::find(ks.begin(), ks.end(), lab[i]) - ks.begin();
    W += (x.row(i) - c.row(k)).squaredNorm();
    B += (c.row(k) - g).squaredNorm();  // summed per member = n_k |c_k - g|^2
  }
  const long double n = x.rows(), K = ks.size();
  return static_cast<double>((B / (K - 1)) / (W / (n - K)));
}

inline double db_oracle(const Matrix& x, const std::vector<int>& lab) {
  const auto ks = distinct(lab);
  const Matrix c = means_of(x, lab, ks);
  std::vector<long double> s(ks.size(), 0), cnt(ks.size(), 0);
  for (int i = 0; i < x.rows(); ++i) {
    const auto k = std::find(ks.begin(), ks.end(), lab[i]) - ks.begin();
    s[k] += (x.row(i) - c.row(k)).norm();
    cnt[k] += 1;
  }
  for (std::size_t k = 0; k < ks.size(); ++k) s[k] /= cnt[k];
  long double total = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    long double worst = 0;
    for (std::size_t j = 0; j < ks.size(); ++j)
      if (i != j) worst = std::max(worst, (s[i] + s[j]) / (c.row(i) - c.row(j)).norm());
    total += worst;
  }
  return static_cast<double>(total / ks.size());
}

// Dense N x N evaluation of the Gaussian log-likelihood with beta by GLS.
inline double dense_loglik(const LmmProblem& p, double sa, double sb, double se) {
  const auto n = static_cast<Eigen::Index>(p.n());
  Eigen::MatrixXd v = se * Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (p.slot_a()[i] == p.slot_a()[j]) v(i, j) += sa;
      if (p.slot_b()[i] == p.slot_b()[j]) v(i, j) += sb;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(v);
  const Eigen::MatrixXd vx = llt.solve(p.x());
  const Eigen::VectorXd beta = (p.x().transpose() * vx).ldlt().solve(vx.transpose() * p.y());
  const Eigen::VectorXd r = p.y() - p.x() * beta;
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + r.dot(llt.solve(r)));
}

}  // namespace oracle
