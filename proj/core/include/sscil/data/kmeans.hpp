#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sscil/data/feature_matrix.hpp"

namespace sscil {

struct KMeansOptions {
  int k = 2;
  std::uint64_t seed = 0;
  int max_iters = 300;
  // Stop once ||C_new - C_old||_F / ||C_old||_F drops below this.
  double tol = 1e-6;
};

struct KMeansResult {
  std::vector<int> assignment;  // one entry per input row
  Eigen::MatrixXd centroids;    // k x dim
  // Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_trace;
  int iterations = 0;
  bool converged = false;
};

// k-means++ seeding (D^2 sampling). Returns k x dim initial centroids.
Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

// Lloyd iterations from fixed initial centroids. Ties in the nearest-centroid
// search go to the lowest centroid index. A centroid left without points is
// moved onto the point farthest from its current centroid.
KMeansResult lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iters, double tol);

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

// Cluster index per sample id. Errors: infeasible-k when k < 2 or k > rows,
// invalid-feature on non-finite input.
std::map<std::string, int> kmeans_cluster(const FeatureMatrix& features, int k, std::uint64_t seed,
                                          int max_iters = 300, double tol = 1e-6);

}  // namespace sscil
