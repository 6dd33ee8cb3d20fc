#pragma once

#include <cstddef>
#include <vector>

namespace sscil {

// H x W x 3 image, interleaved RGB, values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, float fill = 0.0F)
      : height_(height), width_(width), pixels_(static_cast<std::size_t>(height) * width * 3, fill) {}

  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

  float& at(int y, int x, int c) noexcept { return pixels_[index(y, x, c)]; }
  [[nodiscard]] float at(int y, int x, int c) const noexcept { return pixels_[index(y, x, c)]; }

  [[nodiscard]] const std::vector<float>& data() const noexcept { return pixels_; }
  std::vector<float>& data() noexcept { return pixels_; }

  // True iff H, W >= 1 and every value lies in [0, 1].
  [[nodiscard]] bool valid() const noexcept;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  [[nodiscard]] std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> pixels_;
};

}  // namespace sscil
