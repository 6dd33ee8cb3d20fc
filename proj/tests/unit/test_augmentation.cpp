#include <algorithm>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gtest_helpers.hpp"
#include "sscil/augment/augmentation.hpp"

using namespace sscil;

namespace {

bool is_gray(const Image& img) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.at(y, x, 0) != img.at(y, x, 1) || img.at(y, x, 1) != img.at(y, x, 2)) return false;
    }
  }
  return true;
}

AugmentationConfig all_disabled(int size) {
  auto cfg = byol_augmentation(size);
  for (auto op : kAllAugOps) cfg.set_enabled(op, false);
  return cfg;
}

}  // namespace

TEST(Grayscale, FixedPointAndRedPixel) {
  Image gray(2, 2, 0.5F);
  EXPECT_EQ(grayscale(gray), gray);
  Image red(1, 1);
  red.at(0, 0, 0) = 1.0F;
  const auto g = grayscale(red);
  for (int c = 0; c < 3; ++c) EXPECT_FLOAT_EQ(g.at(0, 0, c), 0.299F);
}

TEST(Grayscale, EqualChannelsAndIdempotent) {
  Rng rng(1);
  const auto img = toy::noise_image(9, rng);
  const auto g = grayscale(img);
  EXPECT_TRUE(is_gray(g));
  EXPECT_EQ(grayscale(g), g);
}

TEST(Solarize, Thresholds) {
  Rng rng(2);
  auto img = toy::noise_image(8, rng);
  for (auto& v : img.data()) v = std::min(v, 0.99F);
  EXPECT_EQ(solarize(img, 1.0F), img);
  const auto inv = solarize(img, 0.0F);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_FLOAT_EQ(inv.data()[i], 1.0F - img.data()[i]);
  Image px(1, 1, 0.7F);
  EXPECT_FLOAT_EQ(solarize(px, 0.5F).at(0, 0, 0), 0.3F);
  Image low(1, 1, 0.4F);
  EXPECT_FLOAT_EQ(solarize(low, 0.5F).at(0, 0, 0), 0.4F);
}

TEST(Primitives, PreservePixelRange) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = toy::noise_image(12, rng);
    EXPECT_TRUE(adjust_brightness(img, 1.9F).valid());
    EXPECT_TRUE(adjust_contrast(img, 1.9F).valid());
    EXPECT_TRUE(adjust_saturation(img, 1.9F).valid());
    EXPECT_TRUE(adjust_hue(img, 0.37F).valid());
    EXPECT_TRUE(gaussian_blur(img, 1.7F, 5).valid());
    EXPECT_TRUE(resized_crop(img, 2, 1, 7, 9, 20).valid());
    EXPECT_TRUE(hflip(img).valid());
  }
}

TEST(Primitives, FlipAndBlurKernel) {
  Rng rng(4);
  const auto img = toy::noise_image(5, rng);
  const auto f = hflip(img);
  EXPECT_EQ(f.at(1, 0, 2), img.at(1, 4, 2));
  EXPECT_EQ(hflip(f), img);
  EXPECT_EQ(blur_kernel_size(32), 3);
  EXPECT_EQ(blur_kernel_size(224), 23);
  EXPECT_EQ(blur_kernel_size(100) % 2, 1);
  Image flat(6, 6, 0.25F);
  const auto blurred = gaussian_blur(flat, 1.0F, 5);
  for (float v : blurred.data()) EXPECT_NEAR(v, 0.25F, 1e-6);
}

TEST(AugmentPair, IdentityPipeline) {
  Rng rng(5);
  const auto img = toy::noise_image(16, rng);
  const auto pair = augment_pair(img, all_disabled(16), 77);
  EXPECT_EQ(pair.view_i, img);
  EXPECT_EQ(pair.view_j, img);
}

TEST(AugmentPair, GrayscaleAlways) {
  auto cfg = byol_augmentation(16);
  cfg.views[0].grayscale_p = cfg.views[1].grayscale_p = 1.0;
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto pair = augment_pair(toy::noise_image(20, rng), cfg, static_cast<std::uint64_t>(i));
    EXPECT_TRUE(is_gray(pair.view_i));
    EXPECT_TRUE(is_gray(pair.view_j));
  }
}

TEST(AugmentPair, DeterministicPerKey) {
  const auto cfg = byol_augmentation(16);
  Rng rng(7);
  const auto img = toy::noise_image(24, rng);
  const auto a = augment_pair(img, cfg, 1234);
  const auto b = augment_pair(img, cfg, 1234);
  EXPECT_EQ(a.view_i, b.view_i);
  EXPECT_EQ(a.view_j, b.view_j);
  const auto c = augment_pair(img, cfg, 1235);
  EXPECT_FALSE(a.view_i == c.view_i && a.view_j == c.view_j);
  EXPECT_EQ(a.view_i.height(), 16);
  EXPECT_TRUE(a.view_i.valid());
  EXPECT_TRUE(a.view_j.valid());
}

TEST(AugmentPair, StreamKeyIsCoordinateFunction) {
  const auto k = augmentation_stream_key(1, 2, 3, "img-7");
  EXPECT_EQ(k, augmentation_stream_key(1, 2, 3, "img-7"));
  EXPECT_NE(k, augmentation_stream_key(1, 2, 4, "img-7"));
  EXPECT_NE(k, augmentation_stream_key(1, 3, 3, "img-7"));
  EXPECT_NE(k, augmentation_stream_key(2, 2, 3, "img-7"));
  EXPECT_NE(k, augmentation_stream_key(1, 2, 3, "img-8"));
}

// Disabling an op makes the output independent of that op's parameters.
TEST(AugmentPair, AblationSoundness) {
  Rng rng(8);
  const auto img = toy::noise_image(20, rng);
  const auto base = byol_augmentation(16);
  for (auto op : kAllAugOps) {
    auto off = base;
    off.set_enabled(op, false);
    auto perturbed = off;
    for (auto& v : perturbed.views) {
      switch (op) {
        case AugOp::crop: v.crop_scale_min = 0.5; v.crop_ratio_max = 2.0; break;
        case AugOp::flip: v.flip_p = 1.0 - v.flip_p; break;
        case AugOp::color_jitter: v.jitter_p = 1.0; v.hue = 0.5; v.brightness = 0.9; break;
        case AugOp::grayscale: v.grayscale_p = 1.0; break;
        case AugOp::blur: v.blur_p = 1.0; v.blur_sigma_max = 5.0; break;
        case AugOp::solarize: v.solarize_p = 1.0; v.solarize_threshold = 0.1; break;
      }
    }
    for (std::uint64_t key = 0; key < 8; ++key) {
      const auto a = augment_pair(img, off, key);
      const auto b = augment_pair(img, perturbed, key);
      EXPECT_EQ(a.view_i, b.view_i) << to_string(op);
      EXPECT_EQ(a.view_j, b.view_j) << to_string(op);
    }
  }
}

// Each op draws from its own sub-stream: switching grayscale off leaves the
// crop (and everything else) where it was when grayscale did not fire.
TEST(AugmentPair, OpsDoNotShareStreams) {
  Rng rng(9);
  const auto img = toy::noise_image(20, rng);
  auto with = byol_augmentation(16);
  with.views[0].grayscale_p = with.views[1].grayscale_p = 0.0;
  auto without = with;
  without.set_enabled(AugOp::grayscale, false);
  for (std::uint64_t key = 0; key < 8; ++key) {
    EXPECT_EQ(augment_pair(img, with, key).view_i, augment_pair(img, without, key).view_i);
  }
}

TEST(AugmentationConfig, ByolDefaultsAndValidation) {
  const auto cfg = byol_augmentation(224);
  EXPECT_EQ(cfg.output_size, 224);
  EXPECT_DOUBLE_EQ(cfg.views[0].blur_p, 1.0);
  EXPECT_DOUBLE_EQ(cfg.views[1].blur_p, 0.1);
  EXPECT_DOUBLE_EQ(cfg.views[0].solarize_p, 0.0);
  EXPECT_DOUBLE_EQ(cfg.views[1].solarize_p, 0.2);
  EXPECT_DOUBLE_EQ(cfg.views[0].jitter_p, 0.8);
  EXPECT_DOUBLE_EQ(cfg.views[1].grayscale_p, 0.2);
  EXPECT_DOUBLE_EQ(cfg.views[0].crop_scale_min, 0.08);
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.views[1].flip_p = 1.5;
  EXPECT_SSCIL_ERROR(bad.validate(), Errc::invalid_config);
  bad = cfg;
  bad.output_size = 0;
  EXPECT_SSCIL_ERROR(bad.validate(), Errc::invalid_config);
  EXPECT_EQ(parse_aug_op("grayscale"), AugOp::grayscale);
  EXPECT_SSCIL_ERROR(parse_aug_op("sharpen"), Errc::usage);
}
