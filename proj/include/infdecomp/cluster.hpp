#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace infdecomp {

// Rows are items, columns are embedding dimensions.
using Matrix = Eigen::MatrixXd;

struct KMeansOptions {
  int k = 15;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;          // stop when the largest centroid shift falls below this
  bool allow_exact_fit = false;  // permit N == K (test harnesses only)
};

struct ClusterModel {
  int k = 0;
  Matrix centroids;              // k x d
  std::vector<int> assignments;  // per row of the input matrix
  std::vector<std::string> item_ids;
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> inertia_trace;  // after every Lloyd update

  std::vector<std::size_t> cluster_sizes() const;
};

// k-means++ seeding followed by Lloyd iterations. Ties go to the lowest
// cluster index; an emptied cluster takes the point farthest from its
// centroid. Throws ClusterError when N <= K (N < K with allow_exact_fit) or
// when Lloyd's inertia ever increases.
ClusterModel kmeans(const Matrix& vectors, const KMeansOptions& options, std::vector<std::string> item_ids = {});

// Labels may be any integers; they are compacted internally so every
// cluster is non-empty. Euclidean distance throughout.
double silhouette(const Matrix& vectors, const std::vector<int>& labels);
double calinski_harabasz(const Matrix& vectors, const std::vector<int>& labels);
double davies_bouldin(const Matrix& vectors, const std::vector<int>& labels);

struct MetricReport {
  double silhouette = 0.0;
  double calinski_harabasz = 0.0;
  double davies_bouldin = 0.0;
};

MetricReport intrinsic_metrics(const Matrix& vectors, const std::vector<int>& labels);

struct MetricRow {
  int k = 0;
  std::string view;
  MetricReport metrics;
};

// CSV columns K,view,silhouette,calinski_harabasz,davies_bouldin.
void write_metric_table(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

struct EvalPacket {
  int cluster_id = 0;
  std::vector<std::string> shown_ids;  // 4
  std::vector<std::string> shown;
  std::string held_out_id;
  std::string held_out;
  std::string distractor_id;
  std::string distractor;
  int distractor_cluster = 0;
};

struct PacketResult {
  std::vector<EvalPacket> packets;
  std::vector<std::string> warnings;
};

// For each cluster with at least five members, `per_cluster` packets of four
// shown members plus one held-out member (seeded sample), and one distractor
// from the cluster whose centroid is farthest away. Smaller clusters are
// skipped with a warning. `texts` is parallel to model.assignments.
PacketResult make_eval_packets(const ClusterModel& model, const std::vector<std::string>& texts, int per_cluster,
                               std::uint64_t seed);

void write_packets_jsonl(const std::filesystem::path& path, const std::vector<EvalPacket>& packets);
void write_cluster_model(const std::filesystem::path& path, const ClusterModel& model);

// Stack equal-length vectors into a matrix.
Matrix to_matrix(const std::vector<std::vector<double>>& rows);

}  // namespace infdecomp
