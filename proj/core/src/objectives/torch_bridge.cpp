#include "sscil/objectives/torch_bridge.hpp"

#include <torch/torch.h>

#include "sscil/objectives/losses.hpp"

namespace sscil {

namespace {

using torch::autograd::AutogradContext;
using torch::autograd::tensor_list;

Eigen::MatrixXd to_eigen(const torch::Tensor& t) {
  const auto d = t.detach().to(torch::kFloat64).contiguous().cpu();
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(d.data_ptr<double>(), d.size(0), d.size(1));
}

torch::Tensor to_torch(const Eigen::MatrixXd& m, const torch::Tensor& like) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor rm = m;
  auto out = torch::empty({rm.rows(), rm.cols()}, torch::kFloat64);
  std::memcpy(out.data_ptr<double>(), rm.data(), static_cast<std::size_t>(rm.size()) * sizeof(double));
  return out.to(like.scalar_type());
}

torch::Tensor scalar_like(double v, const torch::Tensor& like) {
  return torch::tensor(v, torch::TensorOptions().dtype(like.scalar_type()));
}

struct NtXentFn : torch::autograd::Function<NtXentFn> {
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& z, double temperature) {
    const auto r = nt_xent_loss(to_eigen(z), temperature);
    ctx->save_for_backward({to_torch(r.grad, z)});
    return scalar_like(r.loss, z);
  }
  static tensor_list backward(AutogradContext* ctx, tensor_list grad_out) {
    return {ctx->get_saved_variables()[0] * grad_out[0], torch::Tensor()};
  }
};

struct CrossEntropyFn : torch::autograd::Function<CrossEntropyFn> {
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& logits, const std::vector<int>& labels) {
    const auto r = cross_entropy_loss(to_eigen(logits), labels);
    ctx->save_for_backward({to_torch(r.grad, logits)});
    return scalar_like(r.loss, logits);
  }
  static tensor_list backward(AutogradContext* ctx, tensor_list grad_out) {
    return {ctx->get_saved_variables()[0] * grad_out[0], torch::Tensor()};
  }
};

struct DistillationFn : torch::autograd::Function<DistillationFn> {
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& logits, const torch::Tensor& teacher) {
    const auto r = distillation_loss(to_eigen(logits), to_eigen(teacher));
    ctx->save_for_backward({to_torch(r.grad, logits)});
    return scalar_like(r.loss, logits);
  }
  static tensor_list backward(AutogradContext* ctx, tensor_list grad_out) {
    return {ctx->get_saved_variables()[0] * grad_out[0], torch::Tensor()};
  }
};

}  // namespace

torch::Tensor nt_xent(const torch::Tensor& z, double temperature) { return NtXentFn::apply(z, temperature); }

torch::Tensor cross_entropy(const torch::Tensor& logits, const std::vector<int>& labels) {
  return CrossEntropyFn::apply(logits, labels);
}

torch::Tensor distillation(const torch::Tensor& student_logits, const torch::Tensor& teacher_probs) {
  return DistillationFn::apply(student_logits, teacher_probs);
}

}  // namespace sscil
