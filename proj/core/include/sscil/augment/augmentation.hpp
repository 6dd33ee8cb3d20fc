#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "sscil/augment/image.hpp"

namespace sscil {

enum class AugOp { crop, flip, color_jitter, grayscale, blur, solarize };

inline constexpr std::array<AugOp, 6> kAllAugOps = {AugOp::crop,      AugOp::flip, AugOp::color_jitter,
                                                   AugOp::grayscale, AugOp::blur, AugOp::solarize};

std::string_view to_string(AugOp op) noexcept;
AugOp parse_aug_op(std::string_view name);

// Per-view probabilities and magnitudes.
struct ViewParams {
  double crop_scale_min = 0.08;
  double crop_scale_max = 1.0;
  double crop_ratio_min = 3.0 / 4.0;
  double crop_ratio_max = 4.0 / 3.0;
  double flip_p = 0.5;
  double jitter_p = 0.8;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.2;
  double hue = 0.1;
  double grayscale_p = 0.2;
  double blur_p = 1.0;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double solarize_p = 0.0;
  double solarize_threshold = 0.5;

  friend bool operator==(const ViewParams&, const ViewParams&) = default;
};

struct AugmentationConfig {
  int output_size = 32;
  // Indexed by AugOp. A disabled op is skipped for every sample and view.
  std::array<bool, 6> enabled = {true, true, true, true, true, true};
  std::array<ViewParams, 2> views{};

  [[nodiscard]] bool is_enabled(AugOp op) const noexcept { return enabled[static_cast<std::size_t>(op)]; }
  void set_enabled(AugOp op, bool on) noexcept { enabled[static_cast<std::size_t>(op)] = on; }

  // Throws invalid-config when a probability leaves [0,1] or a range is inverted.
  void validate() const;

  friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

// BYOL's two asymmetric views: blur 1.0/0.1, solarize 0.0/0.2, everything
// else shared.
AugmentationConfig byol_augmentation(int output_size);

struct ViewPair {
  Image view_i;
  Image view_j;
};

// Key of the random stream for one sample in one epoch of one phase.
std::uint64_t augmentation_stream_key(std::uint64_t run_seed, int phase, int epoch, std::string_view sample_id) noexcept;

// Primitive ops. All map [0,1] images to [0,1] images.
Image grayscale(const Image& img);
Image solarize(const Image& img, float threshold);
Image hflip(const Image& img);
Image resized_crop(const Image& img, int top, int left, int crop_h, int crop_w, int out_size);
Image resize(const Image& img, int out_size);
Image adjust_brightness(const Image& img, float factor);
Image adjust_contrast(const Image& img, float factor);
Image adjust_saturation(const Image& img, float factor);
Image adjust_hue(const Image& img, float shift);
Image gaussian_blur(const Image& img, float sigma, int kernel_size);
int blur_kernel_size(int side) noexcept;

// One view: crop-resize, flip, color jitter, grayscale, blur, solarize, each
// gated by its switch and probability. Every op draws from its own
// sub-stream of `view_key`, so toggling one op never shifts another's draws.
Image augment_view(const Image& img, const AugmentationConfig& cfg, int view, std::uint64_t view_key);

ViewPair augment_pair(const Image& img, const AugmentationConfig& cfg, std::uint64_t stream_key);

}  // namespace sscil
