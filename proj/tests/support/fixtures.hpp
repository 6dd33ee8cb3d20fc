#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sscil/augment/image.hpp"
#include "sscil/common/rng.hpp"
#include "sscil/data/manifest.hpp"
#include "sscil/model/specs.hpp"
#include "sscil/runner/config.hpp"
#include "sscil/train/trainers.hpp"

namespace sscil::toy {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "sscil");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct ToySample {
  std::string id;
  int class_id = 0;
  Split split = Split::train;
  Image image;
};

// Writes every image as images/<id>.ppm and a manifest.csv next to them.
// Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::vector<ToySample>& samples,
                                    const std::map<int, std::string>& groups = {});

// Random images with values in [0, 1].
Image noise_image(int side, Rng& rng);

// Cluster 0: dark blue with horizontal bars. Cluster 1: bright yellow with
// vertical bars. A little pixel noise on both.
Image cluster_image(int cluster, int side, Rng& rng);

// `classes` visually distinct classes (hue and bar orientation), ids
// "<split>-c<class>-<i>".
std::vector<ToySample> toy_classes(int classes, int train_per_class, int test_per_class, int side, std::uint64_t seed);

// In-memory manifest with no image payloads, for the plan tests.
DatasetManifest class_manifest(int classes, int train_per_class, int test_per_class);

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

EncoderSpec micro_encoder(int input_size = 16);
ProjectorSpec small_projector(int depth = 2, int width = 32);

// Short single-worker training config.
TrainConfig quick_train(int epochs, int batch_size, std::uint64_t seed = 7);

// Tiny end-to-end run config over the given manifest: micro encoder at
// 16 px, one epoch per phase, short probes, no histograms.
RunConfig tiny_run_config(const std::filesystem::path& manifest, const std::filesystem::path& output_dir,
                          int num_phases);

std::string read_file(const std::filesystem::path& path);

}  // namespace sscil::toy
