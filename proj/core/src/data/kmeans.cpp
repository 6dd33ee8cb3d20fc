#include "sscil/data/kmeans.hpp"

#include <limits>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"

namespace sscil {

namespace {

void check_input(const Eigen::MatrixXd& points, int k) {
  if (!points.allFinite()) throw Error(Errc::invalid_feature, "non-finite feature values");
  if (k < 2) throw Error(Errc::infeasible_k, "k must be at least 2, got " + std::to_string(k));
  if (k > points.rows()) {
    throw Error(Errc::infeasible_k, "k=" + std::to_string(k) + " exceeds " + std::to_string(points.rows()) + " rows");
  }
}

// Assigns each row to its nearest centroid; returns the inertia.
double assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& assignment,
              std::vector<double>& distance) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
    distance[static_cast<std::size_t>(i)] = best_d;
    inertia += best_d;
  }
  return inertia;
}

}  // namespace

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  check_input(points, k);
  Rng rng(seed);
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

KMeansResult lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iters, double tol) {
  check_input(points, static_cast<int>(centroids.rows()));
  if (centroids.cols() != points.cols()) throw Error(Errc::invalid_feature, "centroid width mismatch");
  const auto n = static_cast<std::size_t>(points.rows());
  const Eigen::Index k = centroids.rows();
  KMeansResult result;
  result.assignment.assign(n, 0);
  std::vector<double> distance(n, 0.0);

  for (int iter = 0; iter < max_iters; ++iter) {
    double inertia = assign(points, centroids, result.assignment, distance);

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(result.assignment[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(result.assignment[i])];
    }
    // Reseed empty clusters on the currently worst-served point. That point's
    // distance drops to zero, so the inertia can only go down.
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (distance[i] > distance[far]) far = i;
      }
      const int old = result.assignment[far];
      if (counts[static_cast<std::size_t>(old)] <= 1) continue;
      sums.row(old) -= points.row(static_cast<Eigen::Index>(far));
      --counts[static_cast<std::size_t>(old)];
      sums.row(c) = points.row(static_cast<Eigen::Index>(far));
      counts[static_cast<std::size_t>(c)] = 1;
      inertia -= distance[far];
      distance[far] = 0.0;
      result.assignment[far] = static_cast<int>(c);
    }
    result.inertia_trace.push_back(inertia);

    Eigen::MatrixXd updated = centroids;
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto count = counts[static_cast<std::size_t>(c)];
      if (count > 0) updated.row(c) = sums.row(c) / static_cast<double>(count);
    }
    const double scale = centroids.norm();
    const double shift = (updated - centroids).norm();
    centroids = std::move(updated);
    result.iterations = iter + 1;
    if (shift <= tol * (scale > 0.0 ? scale : 1.0)) {
      result.converged = true;
      break;
    }
  }
  // Final assignment against the final centroids.
  result.inertia_trace.push_back(assign(points, centroids, result.assignment, distance));
  result.centroids = std::move(centroids);
  return result;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options) {
  return lloyd(points, kmeans_plus_plus(points, options.k, options.seed), options.max_iters, options.tol);
}

std::map<std::string, int> kmeans_cluster(const FeatureMatrix& features, int k, std::uint64_t seed, int max_iters,
                                          double tol) {
  features.validate();
  const auto result = kmeans(features.features, KMeansOptions{k, seed, max_iters, tol});
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < features.sample_ids.size(); ++i) out.emplace(features.sample_ids[i], result.assignment[i]);
  return out;
}

}  // namespace sscil
