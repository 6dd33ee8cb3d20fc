#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace sscil::oracle {

double nt_xent(const Eigen::MatrixXd& z, double tau, std::vector<double>* per_anchor) {
  const Eigen::Index n = z.rows();
  const Eigen::Index k = n / 2;
  Eigen::MatrixXd sim(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      long double dot = 0, na = 0, nb = 0;
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        dot += static_cast<long double>(z(a, c)) * z(b, c);
        na += static_cast<long double>(z(a, c)) * z(a, c);
        nb += static_cast<long double>(z(b, c)) * z(b, c);
      }
      sim(a, b) = static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
    }
  }
  long double total = 0;
  if (per_anchor) per_anchor->assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index pos = a < k ? a + k : a - k;
    long double denom = 0;
    for (Eigen::Index b = 0; b < n; ++b) {
      if (b != a) denom += std::exp(static_cast<long double>(sim(a, b)) / tau);
    }
    const long double num = std::exp(static_cast<long double>(sim(a, pos)) / tau);
    const long double term = -std::log(num / denom);
    if (per_anchor) (*per_anchor)[static_cast<std::size_t>(a)] = static_cast<double>(term);
    total += term;
  }
  return static_cast<double>(total / n);
}

double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  long double total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    long double s = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) s += std::exp(static_cast<long double>(logits(i, c)));
    total += std::log(s) - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return static_cast<double>(total / logits.rows());
}

double distillation(const Eigen::MatrixXd& student, const Eigen::MatrixXd& teacher) {
  long double total = 0;
  for (Eigen::Index i = 0; i < teacher.rows(); ++i) {
    for (Eigen::Index j = 0; j < teacher.cols(); ++j) {
      const long double p = 1.0L / (1.0L + std::exp(-static_cast<long double>(student(i, j))));
      const long double t = teacher(i, j);
      total += -(t * std::log(p) + (1.0L - t) * std::log(1.0L - p));
    }
  }
  return static_cast<double>(total / static_cast<long double>(teacher.rows() * teacher.cols()));
}

Eigen::MatrixXd central_difference(const ScalarFn& f, const Eigen::MatrixXd& x, double h) {
  Eigen::MatrixXd grad(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + h;
      const double up = f(probe);
      probe(i, j) = x(i, j) - h;
      const double down = f(probe);
      probe(i, j) = x(i, j);
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

std::vector<int> lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iters, double tol) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centroids.rows();
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < max_iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        double d = 0;
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
          const double diff = points(i, j) - centroids(c, j);
          d += diff * diff;
        }
        if (d < best) {
          best = d;
          assign[static_cast<std::size_t>(i)] = static_cast<int>(c);
        }
      }
    }
    Eigen::MatrixXd next = centroids;
    for (Eigen::Index c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (assign[static_cast<std::size_t>(i)] == c) {
          sum += points.row(i);
          ++count;
        }
      }
      if (count > 0) next.row(c) = sum / count;
    }
    const double shift = (next - centroids).norm();
    const double base = centroids.norm();
    centroids = next;
    if (shift <= tol * (base > 0 ? base : 1.0)) break;
  }
  return assign;
}

std::vector<int> greedy_herding(const Eigen::MatrixXd& features, int m) {
  const Eigen::Index n = features.rows();
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(features.cols());
  for (Eigen::Index i = 0; i < n; ++i) mu += features.row(i);
  mu /= static_cast<double>(n);
  std::vector<int> chosen;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int step = 0; step < m; ++step) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index cand = 0; cand < n; ++cand) {
      if (used[static_cast<std::size_t>(cand)]) continue;
      Eigen::RowVectorXd mean = features.row(cand);
      for (int c : chosen) mean += features.row(c);
      mean /= static_cast<double>(chosen.size() + 1);
      const double dist = (mu - mean).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(cand);
      }
    }
    chosen.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
  }
  return chosen;
}

}  // namespace sscil::oracle
