#include "sscil/data/feature_matrix.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sscil/common/error.hpp"

namespace sscil {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

namespace {
constexpr const char* kMagic = "SSCIL-FEATURES 1";
}

void FeatureMatrix::validate() const {
  if (static_cast<Eigen::Index>(sample_ids.size()) != features.rows()) {
    throw Error(Errc::invalid_feature, "row count " + std::to_string(features.rows()) + " != " +
                                           std::to_string(sample_ids.size()) + " sample ids");
  }
  if (!features.allFinite()) throw Error(Errc::invalid_feature, "non-finite feature values");
}

void save_features(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  matrix.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << kMagic << '\n' << matrix.rows() << ' ' << matrix.dim() << '\n';
  for (const auto& id : matrix.sample_ids) out << id << '\n';
  // Eigen defaults to column-major; the file is row-major.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = matrix.features;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open feature file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw Error(Errc::invalid_feature, path.string() + ": bad magic line");
  }
  if (!std::getline(in, line)) throw Error(Errc::invalid_feature, path.string() + ": missing shape line");
  std::istringstream shape(line);
  long long rows = -1, dim = -1;
  if (!(shape >> rows >> dim) || rows < 0 || dim < 0) {
    throw Error(Errc::invalid_feature, path.string() + ": bad shape line '" + line + "'");
  }
  FeatureMatrix m;
  m.sample_ids.reserve(static_cast<std::size_t>(rows));
  for (long long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw Error(Errc::invalid_feature, path.string() + ": truncated id list");
    m.sample_ids.push_back(line);
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, dim);
  const auto bytes = static_cast<std::streamsize>(rows * dim * static_cast<long long>(sizeof(double)));
  in.read(reinterpret_cast<char*>(rm.data()), bytes);
  if (in.gcount() != bytes) throw Error(Errc::invalid_feature, path.string() + ": truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::invalid_feature, path.string() + ": trailing bytes after payload");
  }
  m.features = rm;
  m.validate();
  return m;
}

}  // namespace sscil
