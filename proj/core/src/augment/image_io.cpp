#include "sscil/augment/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include "sscil/common/error.hpp"
#include "sscil/common/text.hpp"

namespace sscil {

namespace {

constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarRecord = 1 + 3 * kCifarSide * kCifarSide;

std::filesystem::path resolve(const std::string& path, const std::filesystem::path& root) {
  std::filesystem::path p(path);
  return p.is_relative() && !root.empty() ? root / p : p;
}

// Next whitespace-delimited header token of a pnm file, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open image " + path.string());
  const std::string magic = pnm_token(in);
  long long w = 0, h = 0, maxval = 0;
  if ((magic != "P6" && magic != "P3") || !text::parse_int(pnm_token(in), w) || !text::parse_int(pnm_token(in), h) ||
      !text::parse_int(pnm_token(in), maxval) || w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw Error(Errc::io, path.string() + ": unsupported or malformed ppm header");
  }
  Image img(static_cast<int>(h), static_cast<int>(w));
  const auto scale = static_cast<float>(maxval);
  auto& px = img.data();
  if (magic == "P6") {
    std::vector<unsigned char> raw(px.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw Error(Errc::io, path.string() + ": truncated");
    std::transform(raw.begin(), raw.end(), px.begin(), [scale](unsigned char v) { return static_cast<float>(v) / scale; });
  } else {
    for (auto& v : px) {
      long long value = 0;
      if (!text::parse_int(pnm_token(in), value) || value < 0 || value > maxval) {
        throw Error(Errc::io, path.string() + ": bad ascii sample");
      }
      v = static_cast<float>(value) / scale;
    }
  }
  return img;
}

Image load_cifar_record(const std::filesystem::path& path, long long index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open CIFAR batch " + path.string());
  in.seekg(static_cast<std::streamoff>(index * static_cast<long long>(kCifarRecord)));
  std::array<unsigned char, kCifarRecord> rec{};
  in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  if (in.gcount() != static_cast<std::streamsize>(rec.size())) {
    throw Error(Errc::io, path.string() + ": record " + std::to_string(index) + " out of range");
  }
  Image img(kCifarSide, kCifarSide);
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  for (int y = 0; y < static_cast<int>(kCifarSide); ++y) {
    for (int x = 0; x < static_cast<int>(kCifarSide); ++x) {
      const std::size_t off = 1 + static_cast<std::size_t>(y) * kCifarSide + static_cast<std::size_t>(x);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(rec[off + c * plane]) / 255.0F;
    }
  }
  return img;
}

}  // namespace

bool Image::valid() const noexcept {
  if (height_ < 1 || width_ < 1) return false;
  return std::all_of(pixels_.begin(), pixels_.end(), [](float v) { return v >= 0.0F && v <= 1.0F; });
}

Image load_image(const std::string& uri, const std::filesystem::path& root) {
  const auto hash = uri.rfind('#');
  if (hash != std::string::npos) {
    long long index = 0;
    if (!text::parse_int(std::string_view(uri).substr(hash + 1), index) || index < 0) {
      throw Error(Errc::io, "bad record index in uri '" + uri + "'");
    }
    return load_cifar_record(resolve(uri.substr(0, hash), root), index);
  }
  return load_ppm(resolve(uri, root));
}

void save_ppm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (float v : image.data()) {
    const float clamped = std::clamp(v, 0.0F, 1.0F);
    out.put(static_cast<char>(static_cast<unsigned char>(clamped * 255.0F + 0.5F)));
  }
}

const Image& ImageStore::get(const std::string& uri) {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(uri);
  if (it == cache_.end()) it = cache_.emplace(uri, load_image(uri, root_)).first;
  return it->second;
}

}  // namespace sscil
