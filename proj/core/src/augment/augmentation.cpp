#include "sscil/augment/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sscil/common/error.hpp"
#include "sscil/common/rng.hpp"

namespace sscil {

namespace {

constexpr float kLumR = 0.299F;
constexpr float kLumG = 0.587F;
constexpr float kLumB = 0.114F;

float clamp01(float v) { return std::clamp(v, 0.0F, 1.0F); }

float luminance(float r, float g, float b) {
  // Gray pixels are fixed points exactly, not just up to rounding.
  if (r == g && g == b) return r;
  return clamp01(kLumR * r + kLumG * g + kLumB * b);
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::invalid_config, std::string(name) + " must lie in [0,1]");
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float maxc = std::max({r, g, b});
  const float minc = std::min({r, g, b});
  v = maxc;
  const float delta = maxc - minc;
  s = maxc > 0.0F ? delta / maxc : 0.0F;
  if (delta <= 0.0F) {
    h = 0.0F;
    return;
  }
  if (maxc == r) {
    h = (g - b) / delta;
  } else if (maxc == g) {
    h = 2.0F + (b - r) / delta;
  } else {
    h = 4.0F + (r - g) / delta;
  }
  h /= 6.0F;
  h -= std::floor(h);
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  const float h6 = h * 6.0F;
  const int i = static_cast<int>(std::floor(h6)) % 6;
  const float f = h6 - std::floor(h6);
  const float p = v * (1.0F - s);
  const float q = v * (1.0F - s * f);
  const float t = v * (1.0F - s * (1.0F - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

// Sub-stream ids; stable values, never reorder.
constexpr std::uint64_t kOpStream[] = {11, 12, 13, 14, 15, 16};

Rng op_rng(std::uint64_t view_key, AugOp op) { return Rng(mix(view_key, kOpStream[static_cast<int>(op)])); }

}  // namespace

std::string_view to_string(AugOp op) noexcept {
  switch (op) {
    case AugOp::crop: return "crop";
    case AugOp::flip: return "flip";
    case AugOp::color_jitter: return "color_jitter";
    case AugOp::grayscale: return "grayscale";
    case AugOp::blur: return "blur";
    case AugOp::solarize: return "solarize";
  }
  return "?";
}

AugOp parse_aug_op(std::string_view name) {
  for (AugOp op : kAllAugOps) {
    if (to_string(op) == name) return op;
  }
  throw Error(Errc::usage, "unknown augmentation op '" + std::string(name) +
                               "' (crop|flip|color_jitter|grayscale|blur|solarize)");
}

void AugmentationConfig::validate() const {
  if (output_size < 1) throw Error(Errc::invalid_config, "output_size must be >= 1");
  for (const auto& v : views) {
    check_prob(v.flip_p, "flip_p");
    check_prob(v.jitter_p, "jitter_p");
    check_prob(v.grayscale_p, "grayscale_p");
    check_prob(v.blur_p, "blur_p");
    check_prob(v.solarize_p, "solarize_p");
    check_prob(v.solarize_threshold, "solarize_threshold");
    if (!(v.crop_scale_min > 0.0 && v.crop_scale_min <= v.crop_scale_max && v.crop_scale_max <= 1.0)) {
      throw Error(Errc::invalid_config, "crop scale range must satisfy 0 < min <= max <= 1");
    }
    if (!(v.crop_ratio_min > 0.0 && v.crop_ratio_min <= v.crop_ratio_max)) {
      throw Error(Errc::invalid_config, "crop ratio range must satisfy 0 < min <= max");
    }
    if (v.brightness < 0 || v.contrast < 0 || v.saturation < 0 || v.hue < 0 || v.hue > 0.5) {
      throw Error(Errc::invalid_config, "jitter magnitudes must be >= 0 and hue <= 0.5");
    }
    if (!(v.blur_sigma_min > 0.0 && v.blur_sigma_min <= v.blur_sigma_max)) {
      throw Error(Errc::invalid_config, "blur sigma range must satisfy 0 < min <= max");
    }
  }
}

AugmentationConfig byol_augmentation(int output_size) {
  AugmentationConfig cfg;
  cfg.output_size = output_size;
  cfg.views[0].blur_p = 1.0;
  cfg.views[0].solarize_p = 0.0;
  cfg.views[1].blur_p = 0.1;
  cfg.views[1].solarize_p = 0.2;
  return cfg;
}

std::uint64_t augmentation_stream_key(std::uint64_t run_seed, int phase, int epoch, std::string_view sample_id) noexcept {
  return mix(run_seed, static_cast<std::uint64_t>(phase), static_cast<std::uint64_t>(epoch), hash_string(sample_id));
}

Image grayscale(const Image& img) {
  Image out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float l = luminance(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = l;
    }
  }
  return out;
}

Image solarize(const Image& img, float threshold) {
  Image out = img;
  for (auto& v : out.data()) {
    if (v >= threshold) v = 1.0F - v;
  }
  return out;
}

Image hflip(const Image& img) {
  Image out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.width() - 1 - x, c);
    }
  }
  return out;
}

Image resized_crop(const Image& img, int top, int left, int crop_h, int crop_w, int out_size) {
  if (top == 0 && left == 0 && crop_h == img.height() && crop_w == img.width() && out_size == img.height() &&
      out_size == img.width()) {
    return img;
  }
  Image out(out_size, out_size);
  const double sy = static_cast<double>(crop_h) / out_size;
  const double sx = static_cast<double>(crop_w) / out_size;
  for (int y = 0; y < out_size; ++y) {
    const double fy = std::clamp(top + (y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height() - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const auto wy = static_cast<float>(fy - y0);
    for (int x = 0; x < out_size; ++x) {
      const double fx = std::clamp(left + (x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width() - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const auto wx = static_cast<float>(fx - x0);
      for (int c = 0; c < 3; ++c) {
        const float top_row = img.at(y0, x0, c) * (1.0F - wx) + img.at(y0, x1, c) * wx;
        const float bottom_row = img.at(y1, x0, c) * (1.0F - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = clamp01(top_row * (1.0F - wy) + bottom_row * wy);
      }
    }
  }
  return out;
}

Image resize(const Image& img, int out_size) { return resized_crop(img, 0, 0, img.height(), img.width(), out_size); }

Image adjust_brightness(const Image& img, float factor) {
  Image out = img;
  for (auto& v : out.data()) v = clamp01(v * factor);
  return out;
}

Image adjust_contrast(const Image& img, float factor) {
  double mean = 0.0;
  const auto& px = img.data();
  for (std::size_t i = 0; i < px.size(); i += 3) mean += luminance(px[i], px[i + 1], px[i + 2]);
  mean /= static_cast<double>(px.size() / 3);
  Image out = img;
  const auto m = static_cast<float>(mean);
  for (auto& v : out.data()) v = clamp01(factor * v + (1.0F - factor) * m);
  return out;
}

Image adjust_saturation(const Image& img, float factor) {
  Image out = img;
  auto& px = out.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const float l = luminance(px[i], px[i + 1], px[i + 2]);
    for (int c = 0; c < 3; ++c) px[i + c] = clamp01(factor * px[i + c] + (1.0F - factor) * l);
  }
  return out;
}

Image adjust_hue(const Image& img, float shift) {
  Image out = img;
  auto& px = out.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    float h, s, v;
    rgb_to_hsv(px[i], px[i + 1], px[i + 2], h, s, v);
    h += shift;
    h -= std::floor(h);
    hsv_to_rgb(h, s, v, px[i], px[i + 1], px[i + 2]);
    for (int c = 0; c < 3; ++c) px[i + c] = clamp01(px[i + c]);
  }
  return out;
}

int blur_kernel_size(int side) noexcept {
  int k = static_cast<int>(std::lround(0.1 * side));
  if (k % 2 == 0) ++k;
  return std::max(k, 3);
}

Image gaussian_blur(const Image& img, float sigma, int kernel_size) {
  const int radius = kernel_size / 2;
  std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
  float total = 0.0F;
  for (int i = -radius; i <= radius; ++i) {
    const float w = std::exp(-0.5F * static_cast<float>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;
  // Reflect padding without repeating the edge pixel.
  const auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  Image tmp(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0F;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * img.at(y, reflect(x + k, img.width()), c);
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  Image out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0F;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(reflect(y + k, img.height()), x, c);
        }
        out.at(y, x, c) = clamp01(acc);
      }
    }
  }
  return out;
}

Image augment_view(const Image& img, const AugmentationConfig& cfg, int view, std::uint64_t view_key) {
  const ViewParams& p = cfg.views[static_cast<std::size_t>(view)];
  const int h = img.height();
  const int w = img.width();
  Image out;

  if (cfg.is_enabled(AugOp::crop)) {
    Rng rng = op_rng(view_key, AugOp::crop);
    const double area = static_cast<double>(h) * w;
    const double log_lo = std::log(p.crop_ratio_min);
    const double log_hi = std::log(p.crop_ratio_max);
    bool found = false;
    for (int attempt = 0; attempt < 10 && !found; ++attempt) {
      const double target = area * rng.uniform(p.crop_scale_min, p.crop_scale_max);
      const double ratio = std::exp(rng.uniform(log_lo, log_hi));
      const int cw = static_cast<int>(std::lround(std::sqrt(target * ratio)));
      const int ch = static_cast<int>(std::lround(std::sqrt(target / ratio)));
      if (cw > 0 && cw <= w && ch > 0 && ch <= h) {
        const int top = static_cast<int>(rng.index(static_cast<std::uint64_t>(h - ch + 1)));
        const int left = static_cast<int>(rng.index(static_cast<std::uint64_t>(w - cw + 1)));
        out = resized_crop(img, top, left, ch, cw, cfg.output_size);
        found = true;
      }
    }
    if (!found) {
      // Central crop clamped to the ratio range.
      const double in_ratio = static_cast<double>(w) / h;
      int cw = w, ch = h;
      if (in_ratio < p.crop_ratio_min) {
        ch = static_cast<int>(std::lround(w / p.crop_ratio_min));
      } else if (in_ratio > p.crop_ratio_max) {
        cw = static_cast<int>(std::lround(h * p.crop_ratio_max));
      }
      out = resized_crop(img, (h - ch) / 2, (w - cw) / 2, ch, cw, cfg.output_size);
    }
  } else {
    out = resize(img, cfg.output_size);
  }

  if (cfg.is_enabled(AugOp::flip)) {
    Rng rng = op_rng(view_key, AugOp::flip);
    if (rng.bernoulli(p.flip_p)) out = hflip(out);
  }

  if (cfg.is_enabled(AugOp::color_jitter)) {
    Rng rng = op_rng(view_key, AugOp::color_jitter);
    if (rng.bernoulli(p.jitter_p)) {
      const auto b = static_cast<float>(rng.uniform(std::max(0.0, 1.0 - p.brightness), 1.0 + p.brightness));
      const auto c = static_cast<float>(rng.uniform(std::max(0.0, 1.0 - p.contrast), 1.0 + p.contrast));
      const auto s = static_cast<float>(rng.uniform(std::max(0.0, 1.0 - p.saturation), 1.0 + p.saturation));
      const auto hshift = static_cast<float>(rng.uniform(-p.hue, p.hue));
      std::array<int, 4> order = {0, 1, 2, 3};
      rng.shuffle(std::span<int>(order));
      for (int which : order) {
        switch (which) {
          case 0: out = adjust_brightness(out, b); break;
          case 1: out = adjust_contrast(out, c); break;
          case 2: out = adjust_saturation(out, s); break;
          default: out = adjust_hue(out, hshift); break;
        }
      }
    }
  }

  if (cfg.is_enabled(AugOp::grayscale)) {
    Rng rng = op_rng(view_key, AugOp::grayscale);
    if (rng.bernoulli(p.grayscale_p)) out = grayscale(out);
  }

  if (cfg.is_enabled(AugOp::blur)) {
    Rng rng = op_rng(view_key, AugOp::blur);
    if (rng.bernoulli(p.blur_p)) {
      const auto sigma = static_cast<float>(rng.uniform(p.blur_sigma_min, p.blur_sigma_max));
      out = gaussian_blur(out, sigma, blur_kernel_size(out.height()));
    }
  }

  if (cfg.is_enabled(AugOp::solarize)) {
    Rng rng = op_rng(view_key, AugOp::solarize);
    if (rng.bernoulli(p.solarize_p)) out = solarize(out, static_cast<float>(p.solarize_threshold));
  }
  return out;
}

ViewPair augment_pair(const Image& img, const AugmentationConfig& cfg, std::uint64_t stream_key) {
  return {augment_view(img, cfg, 0, mix(stream_key, 0)), augment_view(img, cfg, 1, mix(stream_key, 1))};
}

}  // namespace sscil
