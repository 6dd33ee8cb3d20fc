#pragma once

#include <torch/types.h>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sscil/augment/image.hpp"
#include "sscil/model/specs.hpp"

namespace sscil {

// Ordered (name, tensor) pairs: parameters first, then buffers such as the
// batch-norm running statistics.
using TensorMap = std::vector<std::pair<std::string, torch::Tensor>>;

TensorMap clone_tensors(const TensorMap& tensors);
bool bitwise_equal(const TensorMap& a, const TensorMap& b);

/// Parameter snapshot of encoder f and projector g, tagged with the phase
/// that produced it (0 = fresh initialisation).
///
/// Tensors held by a ModelState are treated as immutable: Network::load
/// copies them and export_state() clones, so two states never alias storage
/// that training writes to.
struct ModelState {
  int phase_index = 0;
  EncoderSpec encoder_spec;
  ProjectorSpec projector_spec;
  TensorMap encoder;
  TensorMap projector;

  [[nodiscard]] ModelState clone() const;
};

bool bitwise_equal(const ModelState& a, const ModelState& b);

// Deterministic initialisation; phase_index 0. Errors: registry.
ModelState init_model(const EncoderSpec& encoder, const ProjectorSpec& projector, std::uint64_t seed);

// Fresh projector parameters for the given spec, keyed by `seed`.
TensorMap init_projector(const ProjectorSpec& projector, int feature_dim, std::uint64_t seed);

// Start of the next phase: encoder copied bitwise, projector copied or
// re-initialised from `seed`, phase_index + 1.
ModelState inherit_state(const ModelState& prev, bool inherit_projector, std::uint64_t seed);

// Stacks images into an N x 3 x H x W float tensor.
torch::Tensor images_to_tensor(std::span<const Image> images);

class NetworkImpl;

// Trainable module pair built from specs. Owns its parameters.
class Network {
 public:
  Network(const EncoderSpec& encoder, const ProjectorSpec& projector);
  explicit Network(const ModelState& state);
  ~Network();
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;

  void load(const ModelState& state);
  [[nodiscard]] ModelState export_state(int phase_index) const;

  // Errors: input-shape when the images do not match the encoder input size.
  torch::Tensor encode(const torch::Tensor& images);
  // Errors: input-shape when the width differs from feature_dim.
  torch::Tensor project(const torch::Tensor& features);

  void train(bool on);
  [[nodiscard]] bool is_training() const;

  std::vector<torch::Tensor> encoder_parameters() const;
  std::vector<torch::Tensor> projector_parameters() const;

  [[nodiscard]] const EncoderSpec& encoder_spec() const noexcept { return encoder_spec_; }
  [[nodiscard]] const ProjectorSpec& projector_spec() const noexcept { return projector_spec_; }

 private:
  EncoderSpec encoder_spec_;
  ProjectorSpec projector_spec_;
  std::unique_ptr<NetworkImpl> impl_;
};

// Eval-mode forwards on a frozen state (batch-norm uses running statistics).
torch::Tensor forward_features(const ModelState& state, const torch::Tensor& images);
torch::Tensor forward_projection(const ModelState& state, const torch::Tensor& features);

}  // namespace sscil
