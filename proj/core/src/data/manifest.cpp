#include "sscil/data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "sscil/common/error.hpp"
#include "sscil/common/text.hpp"

namespace sscil {

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

bool skippable(std::string_view line) {
  const auto t = text::trim(line);
  return t.empty() || t.front() == '#';
}

// Reads a two-column `class_id,<value>` sidecar with the given header.
std::map<int, std::string> parse_class_table(std::istream& in, std::string_view value_column) {
  std::map<int, std::string> table;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = text::split_csv(line);
    if (!header_seen) {
      if (fields.size() != 2 || fields[0] != "class_id" || fields[1] != value_column) {
        throw Error(Errc::malformed_manifest,
                    at_line(line_no) + "expected header 'class_id," + std::string(value_column) + "'");
      }
      header_seen = true;
      continue;
    }
    long long id = 0;
    if (fields.size() != 2 || !text::parse_int(fields[0], id) || id < 0 || fields[1].empty()) {
      throw Error(Errc::malformed_manifest, at_line(line_no) + "expected 'class_id," + std::string(value_column) + "'");
    }
    if (!table.emplace(static_cast<int>(id), fields[1]).second) {
      throw Error(Errc::malformed_manifest, at_line(line_no) + "class " + std::to_string(id) + " listed twice");
    }
  }
  if (!header_seen) throw Error(Errc::malformed_manifest, "missing header line");
  return table;
}

std::filesystem::path sidecar(const std::filesystem::path& path, std::string_view suffix) {
  auto p = path;
  p.replace_extension();
  p += suffix;
  return p;
}

}  // namespace

std::string_view to_string(Split split) noexcept { return split == Split::train ? "train" : "test"; }

std::vector<int> DatasetManifest::class_ids() const {
  std::vector<int> ids;
  ids.reserve(class_names.size());
  for (const auto& [id, _] : class_names) ids.push_back(id);
  return ids;
}

std::vector<SampleRecord> DatasetManifest::split_samples(Split split) const {
  std::vector<SampleRecord> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out),
               [split](const SampleRecord& s) { return s.split == split; });
  return out;
}

std::vector<SampleRecord> DatasetManifest::samples_of_classes(const std::vector<int>& classes, Split split) const {
  const std::set<int> wanted(classes.begin(), classes.end());
  std::vector<SampleRecord> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out), [&](const SampleRecord& s) {
    return s.split == split && wanted.contains(s.class_id);
  });
  return out;
}

const SampleRecord* DatasetManifest::find(const std::string& sample_id) const {
  const auto it = std::find_if(samples.begin(), samples.end(),
                               [&](const SampleRecord& s) { return s.sample_id == sample_id; });
  return it == samples.end() ? nullptr : &*it;
}

void DatasetManifest::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.sample_id).second) throw Error(Errc::duplicate_id, "sample id '" + s.sample_id + "' repeated");
    if (s.class_id < 0) throw Error(Errc::malformed_manifest, "negative class id for '" + s.sample_id + "'");
    if (!class_names.contains(s.class_id)) {
      throw Error(Errc::malformed_manifest,
                  "class " + std::to_string(s.class_id) + " of '" + s.sample_id + "' has no class_names entry");
    }
  }
  if (semantic_group) {
    for (const auto& [id, _] : class_names) {
      if (!semantic_group->contains(id)) {
        throw Error(Errc::malformed_manifest, "grouping does not cover class " + std::to_string(id));
      }
    }
  }
}

DatasetManifest parse_manifest(std::istream& records, std::istream* class_names, std::istream* grouping,
                               std::filesystem::path root) {
  DatasetManifest manifest;
  manifest.root = std::move(root);
  std::optional<std::map<int, std::string>> names;
  if (class_names != nullptr) names = parse_class_table(*class_names, "class_name");

  std::unordered_set<std::string> seen;
  std::set<int> classes;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(records, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = text::split_csv(line);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"sample_id", "uri", "class_id", "split"}) {
        throw Error(Errc::malformed_manifest, at_line(line_no) + "expected header 'sample_id,uri,class_id,split'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw Error(Errc::malformed_manifest, at_line(line_no) + "expected 4 fields, got " + std::to_string(fields.size()));
    }
    SampleRecord rec;
    rec.sample_id = fields[0];
    rec.uri = fields[1];
    long long cls = 0;
    if (rec.sample_id.empty()) throw Error(Errc::malformed_manifest, at_line(line_no) + "empty sample_id");
    if (!text::parse_int(fields[2], cls) || cls < 0) {
      throw Error(Errc::malformed_manifest, at_line(line_no) + "class_id must be a non-negative integer");
    }
    rec.class_id = static_cast<int>(cls);
    if (fields[3] == "train") {
      rec.split = Split::train;
    } else if (fields[3] == "test") {
      rec.split = Split::test;
    } else {
      throw Error(Errc::malformed_manifest, at_line(line_no) + "split must be 'train' or 'test'");
    }
    if (!seen.insert(rec.sample_id).second) {
      throw Error(Errc::duplicate_id, at_line(line_no) + "sample id '" + rec.sample_id + "' repeated");
    }
    if (names && !names->contains(rec.class_id)) {
      throw Error(Errc::malformed_manifest,
                  at_line(line_no) + "class " + std::to_string(rec.class_id) + " has no class_names entry");
    }
    classes.insert(rec.class_id);
    manifest.samples.push_back(std::move(rec));
  }
  if (!header_seen) throw Error(Errc::malformed_manifest, "missing header line");

  if (names) {
    manifest.class_names = std::move(*names);
  } else {
    for (int c : classes) manifest.class_names.emplace(c, "class_" + std::to_string(c));
  }
  if (grouping != nullptr) manifest.semantic_group = parse_grouping(*grouping);
  manifest.validate();
  return manifest;
}

std::map<int, std::string> parse_grouping(std::istream& in) { return parse_class_table(in, "group_label"); }

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream records(path);
  if (!records) throw Error(Errc::io, "cannot open manifest " + path.string());
  std::ifstream names(sidecar(path, ".classes.csv"));
  std::ifstream groups(sidecar(path, ".groups.csv"));
  return parse_manifest(records, names ? &names : nullptr, groups ? &groups : nullptr,
                        std::filesystem::absolute(path).parent_path());
}

void attach_grouping(DatasetManifest& manifest, const std::filesystem::path& grouping_path) {
  std::ifstream in(grouping_path);
  if (!in) throw Error(Errc::io, "cannot open grouping " + grouping_path.string());
  manifest.semantic_group = parse_grouping(in);
  manifest.validate();
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out << "sample_id,uri,class_id,split\n";
    for (const auto& s : manifest.samples) {
      out << s.sample_id << ',' << s.uri << ',' << s.class_id << ',' << to_string(s.split) << '\n';
    }
  }
  {
    std::ofstream out(sidecar(path, ".classes.csv"));
    out << "class_id,class_name\n";
    for (const auto& [id, name] : manifest.class_names) out << id << ',' << name << '\n';
  }
  if (manifest.semantic_group) {
    std::ofstream out(sidecar(path, ".groups.csv"));
    out << "class_id,group_label\n";
    for (const auto& [id, group] : *manifest.semantic_group) out << id << ',' << group << '\n';
  }
}

}  // namespace sscil
