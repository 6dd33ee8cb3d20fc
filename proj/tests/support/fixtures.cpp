#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "sscil/augment/image_io.hpp"
#include "sscil/common/error.hpp"

namespace sscil::toy {

TempDir::TempDir(const std::string& tag) {
  std::string tmpl = (std::filesystem::temp_directory_path() / (tag + "-XXXXXX")).string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw Error(Errc::io, "mkdtemp failed for " + tmpl);
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::vector<ToySample>& samples,
                                    const std::map<int, std::string>& groups) {
  std::filesystem::create_directories(dir / "images");
  DatasetManifest manifest;
  for (const auto& s : samples) {
    const std::string uri = "images/" + s.id + ".ppm";
    save_ppm(s.image, dir / uri);
    manifest.samples.push_back({s.id, uri, s.class_id, s.split});
    manifest.class_names.emplace(s.class_id, "class_" + std::to_string(s.class_id));
  }
  if (!groups.empty()) manifest.semantic_group = groups;
  const auto path = dir / "manifest.csv";
  save_manifest(manifest, path);
  return path;
}

Image noise_image(int side, Rng& rng) {
  Image img(side, side);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

namespace {

void hue_to_rgb(double h, float rgb[3]) {
  const double r = std::clamp(std::abs(h * 6.0 - 3.0) - 1.0, 0.0, 1.0);
  const double g = std::clamp(2.0 - std::abs(h * 6.0 - 2.0), 0.0, 1.0);
  const double b = std::clamp(2.0 - std::abs(h * 6.0 - 4.0), 0.0, 1.0);
  rgb[0] = static_cast<float>(r);
  rgb[1] = static_cast<float>(g);
  rgb[2] = static_cast<float>(b);
}

Image barred(int side, const float fg[3], const float bg[3], bool vertical, int period, double noise, Rng& rng) {
  Image img(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const bool on = ((vertical ? x : y) / period) % 2 == 0;
      for (int c = 0; c < 3; ++c) {
        const double v = (on ? fg[c] : bg[c]) + noise * (rng.uniform() - 0.5);
        img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

}  // namespace

Image cluster_image(int cluster, int side, Rng& rng) {
  if (cluster == 0) {
    const float fg[3] = {0.05F, 0.1F, 0.45F};
    const float bg[3] = {0.0F, 0.0F, 0.15F};
    return barred(side, fg, bg, false, 2, 0.1, rng);
  }
  const float fg[3] = {0.95F, 0.9F, 0.2F};
  const float bg[3] = {0.75F, 0.7F, 0.05F};
  return barred(side, fg, bg, true, 2, 0.1, rng);
}

std::vector<ToySample> toy_classes(int classes, int train_per_class, int test_per_class, int side, std::uint64_t seed) {
  std::vector<ToySample> out;
  for (int split = 0; split < 2; ++split) {
    const int per = split == 0 ? train_per_class : test_per_class;
    for (int c = 0; c < classes; ++c) {
      for (int i = 0; i < per; ++i) {
        Rng rng(mix(seed, split, c, i));
        float fg[3];
        hue_to_rgb(static_cast<double>(c) / classes, fg);
        const float bg[3] = {0.1F, 0.1F, 0.1F};
        ToySample s;
        s.id = std::string(split == 0 ? "train" : "test") + "-c" + std::to_string(c) + "-" + std::to_string(i);
        s.class_id = c;
        s.split = split == 0 ? Split::train : Split::test;
        s.image = barred(side, fg, bg, c % 2 == 1, 2 + c % 3, 0.2, rng);
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

DatasetManifest class_manifest(int classes, int train_per_class, int test_per_class) {
  DatasetManifest m;
  for (int c = 0; c < classes; ++c) {
    m.class_names.emplace(c, "class_" + std::to_string(c));
    for (int i = 0; i < train_per_class; ++i) {
      m.samples.push_back({"tr-" + std::to_string(c) + "-" + std::to_string(i), "x.ppm", c, Split::train});
    }
    for (int i = 0; i < test_per_class; ++i) {
      m.samples.push_back({"te-" + std::to_string(c) + "-" + std::to_string(i), "x.ppm", c, Split::test});
    }
  }
  return m;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

EncoderSpec micro_encoder(int input_size) { return {"resnet-micro", 64, input_size}; }

ProjectorSpec small_projector(int depth, int width) { return {depth, width}; }

TrainConfig quick_train(int epochs, int batch_size, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs_per_phase = epochs;
  cfg.batch_size = batch_size;
  cfg.seed = seed;
  cfg.workers = 1;
  cfg.deterministic = true;
  return cfg;
}

RunConfig tiny_run_config(const std::filesystem::path& manifest, const std::filesystem::path& output_dir,
                          int num_phases) {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.dataset.manifest = manifest.string();
  cfg.plan.num_phases = num_phases;
  cfg.train.epochs_per_phase = 1;
  cfg.train.batch_size = 16;
  cfg.train.memory_capacity = 8;
  cfg.augmentation = byol_augmentation(16);
  cfg.encoder = micro_encoder(16);
  cfg.projector = small_projector();
  cfg.probe.epochs = 5;
  cfg.probe.batch_size = 32;
  cfg.evaluation.histograms = false;
  cfg.output_dir = output_dir.string();
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sscil::toy
