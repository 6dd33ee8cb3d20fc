#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <unordered_map>

#include "sscil/augment/image.hpp"

namespace sscil {

// Supported uris, resolved against a root directory when relative:
//   path/to/image.ppm          binary (P6) or ascii (P3) portable pixmap
//   path/to/batch.bin#<index>  record <index> of a CIFAR-10 binary batch
//                              (1 label byte + 1024 R + 1024 G + 1024 B)
Image load_image(const std::string& uri, const std::filesystem::path& root = {});

void save_ppm(const Image& image, const std::filesystem::path& path);

// Decodes each uri once and keeps it. Thread-safe.
class ImageStore {
 public:
  explicit ImageStore(std::filesystem::path root) : root_(std::move(root)) {}

  const Image& get(const std::string& uri);
  [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  std::mutex mutex_;
  std::unordered_map<std::string, Image> cache_;
};

}  // namespace sscil
