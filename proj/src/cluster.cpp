#include "infdecomp/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "infdecomp/error.hpp"
#include "infdecomp/rng.hpp"
#include "json.hpp"

namespace infdecomp {
namespace {

using nlohmann::json;

struct Compacted {
  std::vector<int> labels;  // 0..k-1
  int k = 0;
};

Compacted compact(const std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [from, to] : remap) to = next++;
  Compacted c;
  c.k = next;
  c.labels.reserve(labels.size());
  for (int l : labels) c.labels.push_back(remap[l]);
  return c;
}

void check_shape(const Matrix& x, const std::vector<int>& labels, const char* what) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw ClusterError(fmt::format("{}: {} labels for {} vectors", what, labels.size(), x.rows()));
}

Matrix cluster_means(const Matrix& x, const Compacted& c, std::vector<std::size_t>* sizes = nullptr) {
  Matrix means = Matrix::Zero(c.k, x.cols());
  std::vector<std::size_t> n(static_cast<std::size_t>(c.k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int l = c.labels[static_cast<std::size_t>(i)];
    means.row(l) += x.row(i);
    ++n[static_cast<std::size_t>(l)];
  }
  for (int j = 0; j < c.k; ++j) means.row(j) /= static_cast<double>(n[static_cast<std::size_t>(j)]);
  if (sizes) *sizes = std::move(n);
  return means;
}

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

int nearest(const Matrix& x, Eigen::Index i, const Matrix& centroids, double* best_dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = sq_dist(x, i, centroids, c);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (best_dist) *best_dist = best_d;
  return best;
}

Matrix kmeanspp_init(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Matrix centroids(k, x.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  centroids.row(0) = x.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, centroids, c - 1));
      total += d2[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform01() * total;
      double cum = 0.0;
      pick = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2[static_cast<std::size_t>(i)] == 0.0) continue;
        cum += d2[static_cast<std::size_t>(i)];
        if (cum > r) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {  // rounding left r at the very end
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (d2[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = x.row(pick);
  }
  return centroids;
}

}  // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

ClusterModel kmeans(const Matrix& x, const KMeansOptions& opt, std::vector<std::string> item_ids) {
  const Eigen::Index n = x.rows();
  if (opt.k < 2) throw ClusterError(fmt::format("kmeans: K must be at least 2 (got {})", opt.k));
  if (opt.allow_exact_fit ? n < opt.k : n <= opt.k)
    throw ClusterError(fmt::format("kmeans: need N > K, got N = {}, K = {}", n, opt.k));
  if (!item_ids.empty() && static_cast<Eigen::Index>(item_ids.size()) != n)
    throw ClusterError("kmeans: item id count does not match vector count");
  if (!x.allFinite()) throw ClusterError("kmeans: non-finite input");

  Rng rng(opt.seed);
  ClusterModel model;
  model.k = opt.k;
  model.seed = opt.seed;
  model.item_ids = std::move(item_ids);
  model.centroids = kmeanspp_init(x, opt.k, rng);
  model.assignments.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n));

  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(opt.k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest(x, i, model.centroids, &dist[static_cast<std::size_t>(i)]);
      model.assignments[static_cast<std::size_t>(i)] = c;
      ++sizes[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < opt.k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto from = static_cast<std::size_t>(model.assignments[static_cast<std::size_t>(i)]);
        if (sizes[from] < 2) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      if (far < 0) throw ClusterError("kmeans: cannot repair empty cluster");
      --sizes[static_cast<std::size_t>(model.assignments[static_cast<std::size_t>(far)])];
      model.assignments[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      dist[static_cast<std::size_t>(far)] = 0.0;
      model.centroids.row(c) = x.row(far);
    }

    Matrix updated = Matrix::Zero(opt.k, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) updated.row(model.assignments[static_cast<std::size_t>(i)]) += x.row(i);
    for (int c = 0; c < opt.k; ++c) updated.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);

    double shift = 0.0;
    for (int c = 0; c < opt.k; ++c) shift = std::max(shift, std::sqrt(sq_dist(updated, c, model.centroids, c)));
    model.centroids = std::move(updated);

    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) inertia += sq_dist(x, i, model.centroids, model.assignments[static_cast<std::size_t>(i)]);
    if (!model.inertia_trace.empty()) {
      const double prev = model.inertia_trace.back();
      if (inertia > prev + 1e-9 * (1.0 + prev))
        throw ClusterError(fmt::format("kmeans: inertia increased from {} to {} at iteration {}", prev, inertia, iter));
    }
    model.inertia_trace.push_back(inertia);
    model.inertia = inertia;
    model.iterations = iter;
    if (shift < opt.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

double silhouette(const Matrix& x, const std::vector<int>& raw_labels) {
  check_shape(x, raw_labels, "silhouette");
  const Compacted c = compact(raw_labels);
  if (c.k < 2) throw ClusterError("silhouette: need at least two clusters");
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> sizes(static_cast<std::size_t>(c.k), 0);
  for (int l : c.labels) ++sizes[static_cast<std::size_t>(l)];

  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(c.k));
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(c.labels[j])] += (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
    }
    const auto own = static_cast<std::size_t>(c.labels[i]);
    if (sizes[own] < 2) continue;  // singleton scores 0
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sums.size(); ++k) {
      if (k != own) b = std::min(b, sums[k] / static_cast<double>(sizes[k]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double calinski_harabasz(const Matrix& x, const std::vector<int>& raw_labels) {
  check_shape(x, raw_labels, "calinski_harabasz");
  const Compacted c = compact(raw_labels);
  const auto n = x.rows();
  if (c.k < 2 || c.k >= n) throw ClusterError(fmt::format("calinski_harabasz: need 2 <= K < N (K = {}, N = {})", c.k, n));
  std::vector<std::size_t> sizes;
  const Matrix means = cluster_means(x, c, &sizes);
  const Eigen::RowVectorXd global = x.colwise().mean();
  double between = 0.0;
  for (int k = 0; k < c.k; ++k) between += static_cast<double>(sizes[static_cast<std::size_t>(k)]) * (means.row(k) - global).squaredNorm();
  double within = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) within += (x.row(i) - means.row(c.labels[static_cast<std::size_t>(i)])).squaredNorm();
  if (within == 0.0) throw ClusterError("calinski_harabasz: degenerate separation (zero within-cluster dispersion)");
  return (between / static_cast<double>(c.k - 1)) / (within / static_cast<double>(n - c.k));
}

double davies_bouldin(const Matrix& x, const std::vector<int>& raw_labels) {
  check_shape(x, raw_labels, "davies_bouldin");
  const Compacted c = compact(raw_labels);
  if (c.k < 2) throw ClusterError("davies_bouldin: need at least two clusters");
  std::vector<std::size_t> sizes;
  const Matrix means = cluster_means(x, c, &sizes);
  std::vector<double> spread(static_cast<std::size_t>(c.k), 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int l = c.labels[static_cast<std::size_t>(i)];
    spread[static_cast<std::size_t>(l)] += (x.row(i) - means.row(l)).norm();
  }
  for (int k = 0; k < c.k; ++k) spread[static_cast<std::size_t>(k)] /= static_cast<double>(sizes[static_cast<std::size_t>(k)]);
  double total = 0.0;
  for (int i = 0; i < c.k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < c.k; ++j) {
      if (j == i) continue;
      const double sep = (means.row(i) - means.row(j)).norm();
      if (sep == 0.0) throw ClusterError(fmt::format("davies_bouldin: clusters {} and {} have coincident centroids", i, j));
      worst = std::max(worst, (spread[static_cast<std::size_t>(i)] + spread[static_cast<std::size_t>(j)]) / sep);
    }
    total += worst;
  }
  return total / static_cast<double>(c.k);
}

MetricReport intrinsic_metrics(const Matrix& x, const std::vector<int>& labels) {
  return {silhouette(x, labels), calinski_harabasz(x, labels), davies_bouldin(x, labels)};
}

void write_metric_table(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ClusterError("cannot write " + path.string());
  out << "K,view,silhouette,calinski_harabasz,davies_bouldin\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", r.k, r.view, r.metrics.silhouette, r.metrics.calinski_harabasz,
                       r.metrics.davies_bouldin);
  }
}

PacketResult make_eval_packets(const ClusterModel& model, const std::vector<std::string>& texts, int per_cluster,
                               std::uint64_t seed) {
  if (texts.size() != model.assignments.size()) throw ClusterError("make_eval_packets: texts must parallel assignments");
  if (model.k < 2) throw ClusterError("make_eval_packets: need at least two clusters");
  auto id_of = [&](std::size_t i) { return model.item_ids.empty() ? std::to_string(i) : model.item_ids[i]; };

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(model.k));
  for (std::size_t i = 0; i < model.assignments.size(); ++i) members[static_cast<std::size_t>(model.assignments[i])].push_back(i);

  PacketResult result;
  Rng rng(seed);
  for (int c = 0; c < model.k; ++c) {
    const auto& own = members[static_cast<std::size_t>(c)];
    if (own.size() < 5) {
      result.warnings.push_back(fmt::format("cluster {} has {} members (< 5); no packets", c, own.size()));
      continue;
    }
    int far = -1;
    double far_d = -1.0;
    for (int o = 0; o < model.k; ++o) {
      if (o == c || members[static_cast<std::size_t>(o)].empty()) continue;
      const double d = (model.centroids.row(c) - model.centroids.row(o)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = o;
      }
    }
    if (far < 0) {
      result.warnings.push_back(fmt::format("cluster {}: no other non-empty cluster for a distractor", c));
      continue;
    }
    const auto& other = members[static_cast<std::size_t>(far)];
    for (int p = 0; p < per_cluster; ++p) {
      const auto pick = rng.sample_without_replacement(own.size(), 5);
      EvalPacket packet;
      packet.cluster_id = c;
      for (std::size_t s = 0; s < 4; ++s) {
        packet.shown_ids.push_back(id_of(own[pick[s]]));
        packet.shown.push_back(texts[own[pick[s]]]);
      }
      packet.held_out_id = id_of(own[pick[4]]);
      packet.held_out = texts[own[pick[4]]];
      const std::size_t d = other[rng.uniform_index(other.size())];
      packet.distractor_id = id_of(d);
      packet.distractor = texts[d];
      packet.distractor_cluster = far;
      result.packets.push_back(std::move(packet));
    }
  }
  return result;
}

void write_packets_jsonl(const std::filesystem::path& path, const std::vector<EvalPacket>& packets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ClusterError("cannot write " + path.string());
  for (const auto& p : packets) {
    out << json{{"cluster_id", p.cluster_id},       {"shown_ids", p.shown_ids},
                {"shown", p.shown},                 {"held_out_id", p.held_out_id},
                {"held_out", p.held_out},           {"distractor_id", p.distractor_id},
                {"distractor", p.distractor},       {"distractor_cluster", p.distractor_cluster}}
               .dump()
        << '\n';
  }
}

void write_cluster_model(const std::filesystem::path& path, const ClusterModel& model) {
  json centroids = json::array();
  for (Eigen::Index r = 0; r < model.centroids.rows(); ++r) {
    std::vector<double> row(model.centroids.row(r).begin(), model.centroids.row(r).end());
    centroids.push_back(row);
  }
  json assignments = json::array();
  for (std::size_t i = 0; i < model.assignments.size(); ++i) {
    assignments.push_back({{"id", model.item_ids.empty() ? std::to_string(i) : model.item_ids[i]}, {"cluster", model.assignments[i]}});
  }
  const json doc = {{"k", model.k},           {"seed", model.seed},           {"inertia", model.inertia},
                    {"iterations", model.iterations}, {"converged", model.converged}, {"centroids", centroids},
                    {"assignments", assignments}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ClusterError("cannot write " + path.string());
  out << doc.dump() << '\n';
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ClusterError("to_matrix: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

}  // namespace infdecomp
