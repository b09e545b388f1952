#pragma once

// Ingestion of version snapshots: manifests, directory scanning, line
// digesting and the on-disk snapshot store.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codesurv/digest.hpp"
#include "codesurv/execution.hpp"

namespace codesurv {

namespace fs = std::filesystem;

struct ExtensionGroup {
  std::string name;
  std::vector<std::string> extensions;  // suffixes including the dot, matched case-sensitively

  bool matches(std::string_view filename) const;
  bool operator==(const ExtensionGroup&) const = default;
};

struct VersionEntry {
  std::string label;
  std::size_t ordinal = 0;
  fs::path source;
  std::optional<std::string> release_date;  // "YYYY-MM-DD"
};

struct CorpusManifest {
  std::string software;
  std::vector<VersionEntry> versions;
  std::vector<ExtensionGroup> groups;

  const ExtensionGroup* find_group(std::string_view name) const;
};

// Validates group and version invariants; throws Error on violation.
void validate_groups(const std::vector<ExtensionGroup>& groups);

// Relative `path` entries are resolved against the manifest's directory.
CorpusManifest load_manifest(const fs::path& path);
CorpusManifest parse_manifest(std::string_view json_text, const fs::path& base_dir,
                              bool check_sources = true);
void write_manifest(const CorpusManifest& manifest, const fs::path& path);

struct FileRecord {
  std::string basename;
  std::string relpath;  // '/'-separated, relative to the snapshot root
  Digest content_digest;

  auto operator<=>(const FileRecord&) const = default;
};

// Digested content of one extension group within one version. Immutable.
class GroupPayload {
 public:
  GroupPayload() = default;
  // `uloc` need not be sorted or unique; it is canonicalised here.
  GroupPayload(std::vector<FileRecord> files, std::vector<Digest> uloc,
               std::size_t unreadable_files = 0);

  const std::vector<FileRecord>& files() const { return files_; }
  const std::vector<Digest>& uloc() const { return uloc_; }  // sorted, unique
  std::size_t uloc_count() const { return uloc_.size(); }
  std::size_t file_count() const { return files_.size(); }
  std::size_t unreadable_files() const { return unreadable_files_; }

  bool operator==(const GroupPayload&) const = default;

 private:
  std::vector<FileRecord> files_;  // sorted by relpath
  std::vector<Digest> uloc_;
  std::size_t unreadable_files_ = 0;
};

class VersionSnapshot {
 public:
  VersionSnapshot() = default;
  VersionSnapshot(std::string label, std::size_t ordinal,
                  std::vector<std::pair<std::string, GroupPayload>> groups);

  const std::string& label() const { return label_; }
  std::size_t ordinal() const { return ordinal_; }
  const std::vector<std::pair<std::string, GroupPayload>>& groups() const { return groups_; }

  bool has_group(std::string_view name) const { return find(name) != nullptr; }
  const GroupPayload* find(std::string_view name) const;
  const GroupPayload& group(std::string_view name) const;  // throws UnknownGroup

  bool operator==(const VersionSnapshot&) const = default;

 private:
  std::string label_;
  std::size_t ordinal_ = 0;
  std::vector<std::pair<std::string, GroupPayload>> groups_;
};

// Splits on LF, strips one trailing CR per line, ignores the empty piece after
// a final newline, and digests each line's raw bytes.
std::vector<Digest> normalize_lines(std::string_view bytes);

// Same line splitting without hashing; views point into `bytes`.
std::vector<std::string_view> split_lines(std::string_view bytes);

// Walks `source` (symlinks are not followed) and digests every regular file
// whose name carries a group suffix. The first matching group wins.
VersionSnapshot scan_version(const fs::path& source, const std::vector<ExtensionGroup>& groups,
                             std::string label = {}, std::size_t ordinal = 0,
                             Execution exec = Execution::Parallel);

// On-disk store: index.json plus one "<ordinal>.<group>.snap" file per
// version per group.
class SnapshotStore {
 public:
  struct VersionInfo {
    std::size_t ordinal;
    std::string label;
  };

  // Creates the directory (and an empty index) if needed. When an index
  // already exists its groups must agree with `groups`.
  static SnapshotStore create(const fs::path& dir, std::string software,
                              std::vector<ExtensionGroup> groups);
  static SnapshotStore open(const fs::path& dir);

  void put(const VersionSnapshot& snapshot);
  VersionSnapshot get(std::size_t ordinal) const;
  std::vector<VersionSnapshot> load_all(Execution exec = Execution::Parallel) const;

  const fs::path& dir() const { return dir_; }
  const std::string& software() const { return software_; }
  const std::vector<ExtensionGroup>& groups() const { return groups_; }
  const std::vector<VersionInfo>& versions() const { return versions_; }

 private:
  SnapshotStore() = default;
  void write_index() const;

  fs::path dir_;
  std::string software_;
  std::vector<ExtensionGroup> groups_;
  std::vector<VersionInfo> versions_;  // sorted by ordinal
};

void store_snapshot(const VersionSnapshot& snapshot, const fs::path& store);
VersionSnapshot load_snapshot(const fs::path& store, std::size_t ordinal);

// Low-level single-group file codec used by the store.
void write_group_file(const fs::path& path, const VersionSnapshot& snapshot,
                      const std::string& group);
std::pair<VersionSnapshot, std::string> read_group_file(const fs::path& path);

}  // namespace codesurv
