#pragma once

#include <string>
#include <vector>

namespace sscil {

// Encoder f. `architecture` names a registry entry; `feature_dim` must equal
// that entry's output width and `input_size` is the expected image side.
struct EncoderSpec {
  std::string architecture = "resnet18";
  int feature_dim = 512;
  int input_size = 32;

  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

// Projector g: `depth` linear layers of `width` outputs, batch norm + ReLU
// after every layer except the last. depth 0 means g is the identity.
struct ProjectorSpec {
  int depth = 3;
  int width = 2048;

  [[nodiscard]] int output_dim(int feature_dim) const noexcept { return depth == 0 ? feature_dim : width; }

  friend bool operator==(const ProjectorSpec&, const ProjectorSpec&) = default;
};

struct ArchitectureInfo {
  std::string name;
  int feature_dim;
  int default_input_size;
  std::string description;
};

// Known encoders:
//   resnet50     bottleneck ResNet-50, ImageNet stem, 2048 features
//   resnet18     CIFAR-style ResNet-18 (3x3 stem, no max-pool), 512 features
//   resnet-mini  three single-block residual stages, 128 features
//   resnet-micro same layout at half the width, 64 features
const std::vector<ArchitectureInfo>& encoder_registry();

// Errors: registry on an unknown name.
const ArchitectureInfo& lookup_architecture(const std::string& name);

// Errors: registry, invalid-config (feature_dim mismatch, bad sizes).
void validate_specs(const EncoderSpec& encoder, const ProjectorSpec& projector);

}  // namespace sscil
