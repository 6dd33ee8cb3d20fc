#include "sscil/eval/features.hpp"

#include <torch/torch.h>

#include "sscil/common/error.hpp"

namespace sscil {

std::string_view to_string(Stage stage) noexcept { return stage == Stage::encoder ? "encoder" : "projector"; }

Stage parse_stage(std::string_view name) {
  if (name == "encoder") return Stage::encoder;
  if (name == "projector") return Stage::projector;
  throw Error(Errc::usage, "unknown stage '" + std::string(name) + "' (expected encoder or projector)");
}

FeatureMatrix extract_features(const ModelState& state, std::span<const SampleRecord> samples, AuditingLoader& loader,
                               Stage stage, int batch_size) {
  torch::NoGradGuard guard;
  Network net(state);
  net.train(false);
  const int side = state.encoder_spec.input_size;
  const int width = stage == Stage::encoder ? state.encoder_spec.feature_dim
                                            : state.projector_spec.output_dim(state.encoder_spec.feature_dim);
  FeatureMatrix out;
  out.features.resize(static_cast<Eigen::Index>(samples.size()), width);
  out.sample_ids.reserve(samples.size());
  const auto step = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t b = 0; b < samples.size(); b += step) {
    const std::size_t e = std::min(samples.size(), b + step);
    auto reps = net.encode(plain_batch(loader, samples.subspan(b, e - b), side));
    if (stage == Stage::projector) reps = net.project(reps);
    out.features.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(e - b)) = to_matrix(reps);
  }
  for (const auto& s : samples) out.sample_ids.push_back(s.sample_id);
  return out;
}

FeatureMatrix export_embeddings(const ModelState& state, std::span<const SampleRecord> samples, ImageStore& images,
                                Stage stage, const std::filesystem::path& out) {
  AuditingLoader loader(images, id_set(samples));
  auto features = extract_features(state, samples, loader, stage);
  save_features(features, out);
  return features;
}

}  // namespace sscil
