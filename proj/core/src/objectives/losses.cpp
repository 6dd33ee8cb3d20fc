#include "sscil/objectives/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sscil/common/error.hpp"

namespace sscil {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error(Errc::input_shape, "vector lengths differ");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(Errc::undefined_similarity, "cosine similarity of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

NtXentResult nt_xent_loss(const Eigen::MatrixXd& z, double temperature) {
  if (!(temperature > 0.0)) throw Error(Errc::invalid_temperature, "temperature must be positive");
  const Eigen::Index n = z.rows();
  if (n == 0 || n % 2 != 0) throw Error(Errc::input_shape, "expected 2K rows, got " + std::to_string(n));
  if (!z.allFinite()) throw Error(Errc::invalid_feature, "non-finite projections");
  const Eigen::Index k = n / 2;

  const Eigen::VectorXd norms = z.rowwise().norm();
  for (Eigen::Index r = 0; r < n; ++r) {
    if (norms[r] == 0.0) throw Error(Errc::undefined_similarity, "row " + std::to_string(r) + " has zero norm");
  }
  const Eigen::MatrixXd u = norms.cwiseInverse().asDiagonal() * z;
  const Eigen::MatrixXd logits = (u * u.transpose()) / temperature;

  // weight(a, j) = dL/dlogit(a, j) * n, for j != a.
  Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(n, n);
  NtXentResult out;
  out.per_anchor.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index pos = a < k ? a + k : a - k;
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != a) peak = std::max(peak, logits(a, j));
    }
    double denom = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != a) denom += std::exp(logits(a, j) - peak);
    }
    const double log_denom = peak + std::log(denom);
    const double loss_a = log_denom - logits(a, pos);
    out.per_anchor[static_cast<std::size_t>(a)] = loss_a;
    total += loss_a;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != a) weight(a, j) = std::exp(logits(a, j) - log_denom);
    }
    weight(a, pos) -= 1.0;
  }
  out.loss = total / static_cast<double>(n);

  // logit(a, j) = u_a . u_j / tau, so dL/du = (W + W^T) u / (n tau); then
  // project through the row normalization: dL/dz_a = (I - u_a u_a^T) g_a / |z_a|.
  const Eigen::MatrixXd grad_u = (weight + weight.transpose()) * u / (static_cast<double>(n) * temperature);
  out.grad.resize(n, z.cols());
  for (Eigen::Index a = 0; a < n; ++a) {
    const double radial = grad_u.row(a).dot(u.row(a));
    out.grad.row(a) = (grad_u.row(a) - radial * u.row(a)) / norms[a];
  }
  return out;
}

LossResult cross_entropy_loss(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index c = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw Error(Errc::input_shape, "label count != row count");
  if (n == 0) throw Error(Errc::input_shape, "empty batch");
  LossResult out;
  out.grad.resize(n, c);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) {
      throw Error(Errc::label, "label " + std::to_string(y) + " outside [0," + std::to_string(c) + ")");
    }
    const double peak = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd shifted = logits.row(i).array() - peak;
    const Eigen::RowVectorXd e = shifted.array().exp();
    const double sum = e.sum();
    total += std::log(sum) - shifted[y];
    out.grad.row(i) = e / sum;
    out.grad(i, y) -= 1.0;
  }
  out.loss = total / static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

LossResult distillation_loss(const Eigen::MatrixXd& student_logits, const Eigen::MatrixXd& teacher_probs) {
  const Eigen::Index n = student_logits.rows();
  const Eigen::Index old = teacher_probs.cols();
  if (teacher_probs.rows() != n || old > student_logits.cols()) {
    throw Error(Errc::class_alignment, "teacher is " + std::to_string(teacher_probs.rows()) + "x" +
                                           std::to_string(old) + ", student is " + std::to_string(n) + "x" +
                                           std::to_string(student_logits.cols()));
  }
  LossResult out;
  out.grad = Eigen::MatrixXd::Zero(n, student_logits.cols());
  if (n == 0 || old == 0) return out;
  const double scale = 1.0 / static_cast<double>(n * old);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < old; ++j) {
      const double x = student_logits(i, j);
      const double t = teacher_probs(i, j);
      // -(t log s(x) + (1-t) log(1-s(x))) = softplus(x) - t x
      total += softplus(x) - t * x;
      out.grad(i, j) = (sigmoid(x) - t) * scale;
    }
  }
  out.loss = total * scale;
  return out;
}

}  // namespace sscil
