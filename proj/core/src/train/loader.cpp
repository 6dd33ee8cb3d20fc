#include "sscil/train/loader.hpp"

#include <torch/torch.h>

#include "sscil/augment/augmentation.hpp"
#include "sscil/common/error.hpp"
#include "sscil/model/model_state.hpp"

namespace sscil {

AuditingLoader::AuditingLoader(ImageStore& store, std::unordered_set<std::string> allowed)
    : store_(store), allowed_(std::move(allowed)) {}

const Image& AuditingLoader::fetch(const SampleRecord& sample) {
  if (!allowed_.contains(sample.sample_id)) {
    throw Error(Errc::leakage, "sample '" + sample.sample_id + "' is outside the data available to this phase");
  }
  {
    std::lock_guard lock(mutex_);
    served_.insert(sample.sample_id);
  }
  return store_.get(sample.uri);
}

std::set<std::string> AuditingLoader::served() const {
  std::lock_guard lock(mutex_);
  return served_;
}

std::unordered_set<std::string> id_set(std::span<const SampleRecord> samples) {
  std::unordered_set<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.insert(s.sample_id);
  return out;
}

torch::Tensor plain_batch(AuditingLoader& loader, std::span<const SampleRecord> samples, int side) {
  std::vector<Image> images;
  images.reserve(samples.size());
  for (const auto& s : samples) {
    const Image& img = loader.fetch(s);
    images.push_back(img.height() == side && img.width() == side ? img : resize(img, side));
  }
  return images_to_tensor(images);
}

Eigen::MatrixXd to_matrix(const torch::Tensor& t) {
  const auto d = t.detach().to(torch::kFloat64).contiguous();
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(d.data_ptr<double>(), d.size(0), d.size(1));
}

}  // namespace sscil
