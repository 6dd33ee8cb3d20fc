#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sscil {

enum class Split { train, test };

std::string_view to_string(Split split) noexcept;

struct SampleRecord {
  std::string sample_id;
  std::string uri;
  int class_id = 0;
  Split split = Split::train;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Catalog of samples that every phase scheme partitions.
///
/// Invariants (checked by `validate()` and on load): sample ids are unique,
/// class ids are non-negative and named in `class_names`, and when a semantic
/// grouping is present it covers every class.
struct DatasetManifest {
  std::vector<SampleRecord> samples;
  std::map<int, std::string> class_names;
  std::optional<std::map<int, std::string>> semantic_group;
  // Directory that relative uris are resolved against.
  std::filesystem::path root;

  [[nodiscard]] std::vector<int> class_ids() const;
  [[nodiscard]] std::vector<SampleRecord> split_samples(Split split) const;
  [[nodiscard]] std::vector<SampleRecord> samples_of_classes(const std::vector<int>& classes, Split split) const;
  [[nodiscard]] const SampleRecord* find(const std::string& sample_id) const;

  void validate() const;
};

// Manifest text format: a required header `sample_id,uri,class_id,split`
// followed by one record per line. Blank lines and lines starting with '#'
// are skipped. Errors name the offending 1-based line.
//
// Optional sidecars next to `<stem>.csv`:
//   `<stem>.classes.csv`  header `class_id,class_name`
//   `<stem>.groups.csv`   header `class_id,group_label`
// Without a classes sidecar, names default to "class_<id>".
DatasetManifest load_manifest(const std::filesystem::path& path);

DatasetManifest parse_manifest(std::istream& records, std::istream* class_names, std::istream* grouping,
                               std::filesystem::path root = {});

std::map<int, std::string> parse_grouping(std::istream& in);

void attach_grouping(DatasetManifest& manifest, const std::filesystem::path& grouping_path);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace sscil
