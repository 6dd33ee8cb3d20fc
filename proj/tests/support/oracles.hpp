#pragma once

// Independent reference evaluators. They share no code with the library and
// favour the most literal transcription of each formula over speed.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sscil::oracle {

// Builds the full 2K x 2K cosine matrix and evaluates every anchor term as
// written: -log(exp(s_pos / tau) / sum_{k != a} exp(s_ak / tau)).
double nt_xent(const Eigen::MatrixXd& z, double tau, std::vector<double>* per_anchor = nullptr);

// Mean of log(sum_c exp(x_c)) - x_label.
double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> labels);

// Mean over rows and old columns of -(t log p + (1 - t) log(1 - p)),
// p = 1 / (1 + exp(-x)).
double distillation(const Eigen::MatrixXd& student, const Eigen::MatrixXd& teacher);

using ScalarFn = std::function<double(const Eigen::MatrixXd&)>;

// Central differences, one coordinate at a time.
Eigen::MatrixXd central_difference(const ScalarFn& f, const Eigen::MatrixXd& x, double h = 1e-5);

// ||a - b||_F / max(||a||_F, ||b||_F), 0 when both vanish.
double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double relative_error(double a, double b);

// Plain Lloyd from the given centroids: nearest centroid by squared
// distance (lowest index on ties), means recomputed from scratch, stop on
// relative Frobenius shift < tol. Empty clusters keep their centroid, so
// only use it on inputs where none empty out.
std::vector<int> lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iters, double tol);

// Greedy herding that, for every candidate at every step, rebuilds the
// exemplar mean from the chosen set and measures its distance to the mean.
std::vector<int> greedy_herding(const Eigen::MatrixXd& features, int m);

}  // namespace sscil::oracle
