#include "sscil/train/classifier_head.hpp"

#include <torch/torch.h>

#include <ATen/CPUGeneratorImpl.h>
#include <cmath>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"

namespace sscil {

void ClassifierHead::grow(const std::vector<int>& new_classes, int feature_dim, std::uint64_t seed) {
  torch::NoGradGuard guard;
  if (!weight.defined()) {
    weight = torch::zeros({0, feature_dim});
    bias = torch::zeros({0});
  }
  if (weight.size(1) != feature_dim) throw Error(Errc::input_shape, "classifier head width mismatch");
  std::vector<torch::Tensor> rows{weight};
  std::vector<torch::Tensor> biases{bias};
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (int cls : new_classes) {
    if (std::find(classes.begin(), classes.end(), cls) != classes.end()) continue;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(mix(seed, 0x68656164ULL, static_cast<std::uint64_t>(cls)));
    rows.push_back(torch::empty({1, feature_dim}).uniform_(-bound, bound, gen));
    biases.push_back(torch::empty({1}).uniform_(-bound, bound, gen));
    classes.push_back(cls);
  }
  weight = torch::cat(rows, 0).contiguous();
  bias = torch::cat(biases, 0).contiguous();
}

int ClassifierHead::column_of(int class_id) const {
  const auto it = std::find(classes.begin(), classes.end(), class_id);
  if (it == classes.end()) throw Error(Errc::label, "class " + std::to_string(class_id) + " has no classifier row");
  return static_cast<int>(it - classes.begin());
}

ClassifierHead ClassifierHead::clone() const {
  ClassifierHead out;
  out.classes = classes;
  if (weight.defined()) {
    out.weight = weight.detach().clone();
    out.bias = bias.detach().clone();
  }
  return out;
}

TensorMap ClassifierHead::tensors() const {
  auto ids = torch::empty({static_cast<int64_t>(classes.size())}, torch::kInt64);
  for (std::size_t i = 0; i < classes.size(); ++i) ids[static_cast<int64_t>(i)] = classes[i];
  TensorMap out{{"classes", ids}};
  if (weight.defined()) {
    out.emplace_back("weight", weight.detach().clone());
    out.emplace_back("bias", bias.detach().clone());
  }
  return out;
}

ClassifierHead ClassifierHead::from_tensors(const TensorMap& tensors) {
  ClassifierHead head;
  for (const auto& [name, t] : tensors) {
    if (name == "classes") {
      const auto ids = t.to(torch::kInt64).contiguous();
      for (int64_t i = 0; i < ids.numel(); ++i) head.classes.push_back(static_cast<int>(ids.data_ptr<int64_t>()[i]));
    } else if (name == "weight") {
      head.weight = t.clone();
    } else if (name == "bias") {
      head.bias = t.clone();
    } else {
      throw Error(Errc::integrity, "unexpected classifier tensor '" + name + "'");
    }
  }
  if (head.weight.defined() && head.weight.size(0) != static_cast<int64_t>(head.classes.size())) {
    throw Error(Errc::integrity, "classifier rows do not match its class list");
  }
  return head;
}

}  // namespace sscil
