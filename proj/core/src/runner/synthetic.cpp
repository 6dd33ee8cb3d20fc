#include "sscil/runner/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "sscil/common/error.hpp"

namespace sscil {

namespace {

struct Rgb {
  float r, g, b;
};

Rgb from_hsv(double h, double s, double v) {
  const double h6 = (h - std::floor(h)) * 6.0;
  const int i = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const auto p = static_cast<float>(v * (1 - s));
  const auto q = static_cast<float>(v * (1 - s * f));
  const auto t = static_cast<float>(v * (1 - s * (1 - f)));
  const auto vv = static_cast<float>(v);
  switch (i) {
    case 0: return {vv, t, p};
    case 1: return {q, vv, p};
    case 2: return {p, vv, t};
    case 3: return {p, q, vv};
    case 4: return {t, p, vv};
    default: return {vv, p, q};
  }
}

double luminance(const Rgb& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

Rgb random_colour(Rng& rng) {
  return from_hsv(rng.uniform(), rng.uniform(0.35, 0.85), rng.uniform(0.25, 0.95));
}

// Membership in shape-local coordinates (unit radius).
bool inside(int class_id, double u, double v) {
  const double au = std::abs(u);
  const double av = std::abs(v);
  auto triangle = [&](double inradius) {
    for (int k = 0; k < 3; ++k) {
      const double a = -std::numbers::pi / 2 + k * 2 * std::numbers::pi / 3;
      if (u * std::cos(a) + v * std::sin(a) > inradius) return false;
    }
    return true;
  };
  auto bars = [](double along, double across) {
    if (std::abs(along) > 1.0 || std::abs(across) > 1.0) return false;
    return static_cast<int>(std::floor((across + 1.0) * 2.5)) % 2 == 0;
  };
  auto plus = [](double a, double b) {
    return (std::abs(a) <= 0.3 && std::abs(b) <= 1.0) || (std::abs(b) <= 0.3 && std::abs(a) <= 1.0);
  };
  const double r = std::sqrt(u * u + v * v);
  switch (class_id) {
    case 0: return r <= 1.0;
    case 1: return r <= 1.0 && r >= 0.6;
    case 2: return au <= 0.85 && av <= 0.85;
    case 3: return au <= 0.85 && av <= 0.85 && !(au <= 0.5 && av <= 0.5);
    case 4: return triangle(0.5);
    case 5: return triangle(0.5) && !triangle(0.2);
    case 6: return bars(u, v);
    case 7: return bars(v, u);
    case 8: return plus(u, v);
    case 9: {
      const double c = std::numbers::sqrt2 / 2;
      return plus(c * (u + v), c * (v - u));
    }
    default: return false;
  }
}

double rotation_range(int class_id) {
  switch (class_id / 2) {
    case 1: return std::numbers::pi / 2;
    case 2: return 2 * std::numbers::pi / 3;
    case 0: return 0.0;
    default: return std::numbers::pi / 18;
  }
}

}  // namespace

const std::vector<std::string>& synthetic_class_names() {
  static const std::vector<std::string> names = {"disk",     "ring",           "square", "square_outline", "triangle",
                                                 "triangle_outline", "hbars", "vbars",  "plus",           "cross"};
  return names;
}

const std::vector<std::string>& synthetic_family_names() {
  static const std::vector<std::string> names = {"round", "square", "triangle", "bars", "crosses"};
  return names;
}

Image render_synthetic(int class_id, Rng& rng) {
  if (class_id < 0 || class_id >= kSyntheticClasses) throw Error(Errc::label, "synthetic class out of range");
  constexpr int S = kSyntheticSide;
  Rgb bg = random_colour(rng);
  Rgb fg = random_colour(rng);
  while (std::abs(luminance(fg) - luminance(bg)) < 0.2) fg = random_colour(rng);
  const double cx = S / 2.0 + rng.uniform(-4.0, 4.0);
  const double cy = S / 2.0 + rng.uniform(-4.0, 4.0);
  const double radius = rng.uniform(7.0, 11.0);
  const double range = rotation_range(class_id);
  const double theta = class_id >= 6 ? rng.uniform(-range, range) : rng.uniform(0.0, range);
  const double grad = rng.uniform(-0.15, 0.15);
  const double gdir = rng.uniform(0.0, 2 * std::numbers::pi);

  struct Dot {
    double x, y, r;
    Rgb c;
  };
  std::vector<Dot> dots(rng.index(3));
  for (auto& d : dots) d = {rng.uniform(0.0, S), rng.uniform(0.0, S), rng.uniform(1.5, 2.5), random_colour(rng)};

  Image img(S, S);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  for (int y = 0; y < S; ++y) {
    for (int x = 0; x < S; ++x) {
      double cover = 0.0;
      for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
          const double px = x + 0.25 + 0.5 * sx - cx;
          const double py = y + 0.25 + 0.5 * sy - cy;
          const double u = (ct * px + st * py) / radius;
          const double v = (-st * px + ct * py) / radius;
          cover += inside(class_id, u, v) ? 0.25 : 0.0;
        }
      }
      const double shade =
          1.0 + grad * ((x - S / 2.0) * std::cos(gdir) + (y - S / 2.0) * std::sin(gdir)) / (S / 2.0);
      Rgb c{static_cast<float>(bg.r * shade), static_cast<float>(bg.g * shade), static_cast<float>(bg.b * shade)};
      c.r = static_cast<float>(cover * fg.r + (1 - cover) * c.r);
      c.g = static_cast<float>(cover * fg.g + (1 - cover) * c.g);
      c.b = static_cast<float>(cover * fg.b + (1 - cover) * c.b);
      for (const auto& d : dots) {
        if ((x + 0.5 - d.x) * (x + 0.5 - d.x) + (y + 0.5 - d.y) * (y + 0.5 - d.y) <= d.r * d.r) c = d.c;
      }
      img.at(y, x, 0) = c.r;
      img.at(y, x, 1) = c.g;
      img.at(y, x, 2) = c.b;
    }
  }
  for (float& p : img.data()) p = static_cast<float>(std::clamp(p + 0.04 * rng.normal(), 0.0, 1.0));
  return img;
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.train_per_class < 1 || spec.test_per_class < 1) {
    throw Error(Errc::invalid_config, "synthetic dataset needs at least one sample per class and split");
  }
  std::filesystem::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.root = std::filesystem::absolute(out_dir);
  std::map<int, std::string> groups;
  for (int c = 0; c < kSyntheticClasses; ++c) {
    manifest.class_names[c] = synthetic_class_names()[static_cast<std::size_t>(c)];
    groups[c] = synthetic_family_names()[static_cast<std::size_t>(c / 2)];
  }
  manifest.semantic_group = groups;

  for (Split split : {Split::train, Split::test}) {
    const bool train = split == Split::train;
    const std::string file = train ? "data_batch.bin" : "test_batch.bin";
    const int count = (train ? spec.train_per_class : spec.test_per_class) * kSyntheticClasses;
    std::ofstream out(out_dir / file, std::ios::binary);
    if (!out) throw Error(Errc::io, "cannot write " + (out_dir / file).string());
    std::vector<unsigned char> record(1 + 3 * kSyntheticSide * kSyntheticSide);
    for (int i = 0; i < count; ++i) {
      const int cls = i % kSyntheticClasses;
      Rng rng(mix(spec.seed, train ? 1 : 2, static_cast<std::uint64_t>(i)));
      const Image img = render_synthetic(cls, rng);
      record[0] = static_cast<unsigned char>(cls);
      for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < kSyntheticSide; ++y) {
          for (int x = 0; x < kSyntheticSide; ++x) {
            const float v = img.at(y, x, ch);
            record[static_cast<std::size_t>(1 + ch * kSyntheticSide * kSyntheticSide + y * kSyntheticSide + x)] =
                static_cast<unsigned char>(std::lround(v * 255.0F));
          }
        }
      }
      out.write(reinterpret_cast<const char*>(record.data()), static_cast<std::streamsize>(record.size()));
      char id[32];
      std::snprintf(id, sizeof id, "%s-%05d", train ? "train" : "test", i);
      manifest.samples.push_back({id, file + "#" + std::to_string(i), cls, split});
    }
  }
  manifest.validate();
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace sscil
