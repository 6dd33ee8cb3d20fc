#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace sscil {

// s(a, b) = a.b / (|a| |b|). Errors: undefined-similarity on a zero vector,
// input-shape on a length mismatch.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // same shape as the input
};

struct NtXentResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;
  std::vector<double> per_anchor;  // 2K entries, mean == loss
};

/// Normalized temperature-scaled cross entropy over a batch of 2K
/// projections. Rows r and r+K are a positive pair; for each anchor the
/// softmax denominator runs over the 2K-1 other rows. The loss is the mean
/// over all 2K anchors.
///
/// Similarities are shifted by the per-anchor maximum before exponentiation,
/// so small temperatures do not overflow.
///
/// Errors: undefined-similarity on a zero-norm row, invalid-temperature when
/// tau <= 0, input-shape on an odd or empty row count.
NtXentResult nt_xent_loss(const Eigen::MatrixXd& z, double temperature);

// Mean softmax cross entropy. Errors: label on an out-of-range label,
// input-shape when the label count differs from the row count.
LossResult cross_entropy_loss(const Eigen::MatrixXd& logits, std::span<const int> labels);

// Mean binary cross entropy between sigmoid(student) and the teacher's
// probabilities over the old classes, which occupy the first
// teacher_probs.cols() columns of the student. Columns of new classes get
// zero gradient. Errors: class-alignment on a shape mismatch.
LossResult distillation_loss(const Eigen::MatrixXd& student_logits, const Eigen::MatrixXd& teacher_probs);

}  // namespace sscil
