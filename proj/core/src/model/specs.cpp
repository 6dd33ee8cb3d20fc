#include "sscil/model/specs.hpp"

#include <algorithm>

#include "sscil/common/error.hpp"

namespace sscil {

const std::vector<ArchitectureInfo>& encoder_registry() {
  static const std::vector<ArchitectureInfo> registry = {
      {"resnet50", 2048, 224, "bottleneck ResNet-50 with the ImageNet stem"},
      {"resnet18", 512, 32, "ResNet-18 with a 3x3 stem for 32x32 inputs"},
      {"resnet-mini", 128, 32, "three residual stages (32/64/128 channels), one block each"},
      {"resnet-micro", 64, 16, "three residual stages (16/32/64 channels), one block each"},
  };
  return registry;
}

const ArchitectureInfo& lookup_architecture(const std::string& name) {
  const auto& reg = encoder_registry();
  const auto it = std::find_if(reg.begin(), reg.end(), [&](const ArchitectureInfo& a) { return a.name == name; });
  if (it == reg.end()) throw Error(Errc::registry, "unknown encoder architecture '" + name + "'");
  return *it;
}

void validate_specs(const EncoderSpec& encoder, const ProjectorSpec& projector) {
  const auto& info = lookup_architecture(encoder.architecture);
  if (encoder.feature_dim != info.feature_dim) {
    throw Error(Errc::invalid_config, encoder.architecture + " produces " + std::to_string(info.feature_dim) +
                                          " features, spec says " + std::to_string(encoder.feature_dim));
  }
  if (encoder.input_size < 8) throw Error(Errc::invalid_config, "encoder input_size must be >= 8");
  if (projector.depth < 0) throw Error(Errc::invalid_config, "projector depth must be >= 0");
  if (projector.depth > 0 && projector.width < 1) throw Error(Errc::invalid_config, "projector width must be >= 1");
}

}  // namespace sscil
