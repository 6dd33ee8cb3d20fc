#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sscil/augment/image.hpp"
#include "sscil/common/rng.hpp"
#include "sscil/data/manifest.hpp"

namespace sscil {

// Procedural stand-in for a CIFAR-10-sized benchmark: ten shape classes in
// five families of two (the families double as semantic groups). Colours,
// position, size, rotation, background gradient, distractor dots and pixel
// noise are drawn independently of the class.
struct SyntheticSpec {
  int train_per_class = 500;
  int test_per_class = 100;
  std::uint64_t seed = 0;
};

inline constexpr int kSyntheticClasses = 10;
inline constexpr int kSyntheticSide = 32;

const std::vector<std::string>& synthetic_class_names();
const std::vector<std::string>& synthetic_family_names();

Image render_synthetic(int class_id, Rng& rng);

// Writes data_batch.bin / test_batch.bin (CIFAR-10 binary layout) and
// manifest.csv with classes and groups sidecars into `out_dir`.
DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace sscil
