#pragma once

#include <torch/types.h>

#include <vector>

namespace sscil {

// Autograd adapters around the double-precision losses in losses.hpp. The
// forward pass copies to double, evaluates the loss and its analytic
// gradient, and the backward pass hands that gradient back to torch.

// z: 2K x d projections (rows r and r+K are positives). Returns a scalar.
torch::Tensor nt_xent(const torch::Tensor& z, double temperature);

torch::Tensor cross_entropy(const torch::Tensor& logits, const std::vector<int>& labels);

// teacher_probs: n x old, aligned with the first `old` logit columns.
torch::Tensor distillation(const torch::Tensor& student_logits, const torch::Tensor& teacher_probs);

}  // namespace sscil
