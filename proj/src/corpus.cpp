#include "codesurv/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "codesurv/error.hpp"
#include "codesurv/kernels.hpp"

namespace codesurv {
namespace {

using json = nlohmann::json;

constexpr std::string_view kSnapshotMagic = "CODESURV-SNAPSHOT";
constexpr int kSnapshotFormat = 1;
constexpr int kIndexSchema = 1;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool valid_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  int month = std::stoi(s.substr(5, 2));
  int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// Field encoding for the space-delimited store records.
std::string encode_field(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (c == ' ' || c == '%' || c == '\n' || c == '\r' || c == '\t') {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out.empty() ? std::string("%") : out;  // lone '%' marks an empty field
}

std::string decode_field(std::string_view s) {
  if (s == "%") return {};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    auto hv = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      throw Error(ErrorCode::MalformedInput, "bad escape in store field");
    };
    if (i + 2 >= s.size()) throw Error(ErrorCode::MalformedInput, "truncated escape in store field");
    out += static_cast<char>(hv(s[i + 1]) * 16 + hv(s[i + 2]));
    i += 2;
  }
  return out;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(' ', pos);
    if (next == std::string_view::npos) next = line.size();
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

fs::path group_file_path(const fs::path& dir, std::size_t ordinal, const std::string& group) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", ordinal);
  return dir / (std::string(buf) + "." + group + ".snap");
}

json groups_to_json(const std::vector<ExtensionGroup>& groups) {
  json arr = json::array();
  for (const auto& g : groups) arr.push_back({{"name", g.name}, {"extensions", g.extensions}});
  return arr;
}

std::vector<ExtensionGroup> groups_from_json(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::MalformedInput, "'groups' must be an array");
  std::vector<ExtensionGroup> groups;
  for (const auto& g : arr) {
    if (!g.is_object() || !g.contains("name") || !g.contains("extensions"))
      throw Error(ErrorCode::MalformedInput, "group needs 'name' and 'extensions'");
    groups.push_back({g.at("name").get<std::string>(),
                      g.at("extensions").get<std::vector<std::string>>()});
  }
  return groups;
}

}  // namespace

bool ExtensionGroup::matches(std::string_view filename) const {
  return std::any_of(extensions.begin(), extensions.end(), [&](const std::string& ext) {
    return filename.size() >= ext.size() && filename.ends_with(ext);
  });
}

const ExtensionGroup* CorpusManifest::find_group(std::string_view name) const {
  for (const auto& g : groups)
    if (g.name == name) return &g;
  return nullptr;
}

void validate_groups(const std::vector<ExtensionGroup>& groups) {
  if (groups.empty()) throw Error(ErrorCode::MalformedInput, "at least one group is required");
  std::set<std::string> names;
  std::set<std::string> all_suffixes;
  for (const auto& g : groups) {
    if (g.name.empty() || g.name.find_first_of(" /.\\") != std::string::npos)
      throw Error(ErrorCode::MalformedInput, "invalid group name '" + g.name + "'");
    if (!names.insert(g.name).second)
      throw Error(ErrorCode::MalformedInput, "duplicate group name '" + g.name + "'");
    if (g.extensions.empty())
      throw Error(ErrorCode::MalformedInput, "group '" + g.name + "' has no extensions");
    std::set<std::string> own;
    for (const auto& ext : g.extensions) {
      if (ext.empty()) throw Error(ErrorCode::MalformedInput, "empty extension in '" + g.name + "'");
      if (!own.insert(ext).second)
        throw Error(ErrorCode::MalformedInput, "duplicate extension '" + ext + "' in '" + g.name + "'");
      if (!all_suffixes.insert(ext).second)
        throw Error(ErrorCode::MalformedInput, "extension '" + ext + "' appears in two groups");
    }
  }
}

CorpusManifest parse_manifest(std::string_view json_text, const fs::path& base_dir,
                              bool check_sources) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, std::string("manifest: ") + e.what());
  }
  CorpusManifest m;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "manifest must be an object");
    m.software = doc.value("software", std::string{});
    m.groups = groups_from_json(doc.at("groups"));
    const json& versions = doc.at("versions");
    if (!versions.is_array() || versions.empty())
      throw Error(ErrorCode::MalformedInput, "'versions' must be a non-empty array");
    std::set<std::string> labels;
    for (const auto& v : versions) {
      VersionEntry e;
      e.label = v.at("label").get<std::string>();
      e.ordinal = m.versions.size();
      fs::path p = v.at("path").get<std::string>();
      e.source = p.is_absolute() ? p : base_dir / p;
      if (v.contains("date") && !v.at("date").is_null()) {
        e.release_date = v.at("date").get<std::string>();
        if (!valid_date(*e.release_date))
          throw Error(ErrorCode::MalformedInput,
                      "version " + e.label + ": date must be YYYY-MM-DD");
      }
      if (e.label.empty()) throw Error(ErrorCode::MalformedInput, "empty version label");
      if (!labels.insert(e.label).second)
        throw Error(ErrorCode::DuplicateVersion, "version label '" + e.label + "' repeated");
      if (check_sources && !fs::is_directory(e.source))
        throw Error(ErrorCode::MissingSource,
                    "version " + e.label + ": snapshot source " + e.source.string() + " not found");
      m.versions.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("manifest: ") + e.what());
  }
  validate_groups(m.groups);
  return m;
}

CorpusManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "manifest " + path.string());
  return parse_manifest(read_text_file(path), path.parent_path());
}

void write_manifest(const CorpusManifest& manifest, const fs::path& path) {
  json doc;
  doc["schema_version"] = 1;
  doc["software"] = manifest.software;
  doc["groups"] = groups_to_json(manifest.groups);
  json versions = json::array();
  const fs::path base = path.parent_path();
  for (const auto& v : manifest.versions) {
    json e;
    e["label"] = v.label;
    fs::path rel = v.source.is_absolute() ? v.source.lexically_relative(fs::absolute(base))
                                          : v.source.lexically_relative(base);
    e["path"] = rel.empty() ? v.source.generic_string() : rel.generic_string();
    if (v.release_date) e["date"] = *v.release_date;
    versions.push_back(std::move(e));
  }
  doc["versions"] = std::move(versions);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

GroupPayload::GroupPayload(std::vector<FileRecord> files, std::vector<Digest> uloc,
                           std::size_t unreadable_files)
    : files_(std::move(files)), uloc_(std::move(uloc)), unreadable_files_(unreadable_files) {
  std::sort(files_.begin(), files_.end(), [](const FileRecord& a, const FileRecord& b) {
    return std::tie(a.relpath, a.basename, a.content_digest) <
           std::tie(b.relpath, b.basename, b.content_digest);
  });
  std::sort(uloc_.begin(), uloc_.end());
  uloc_.erase(std::unique(uloc_.begin(), uloc_.end()), uloc_.end());
}

VersionSnapshot::VersionSnapshot(std::string label, std::size_t ordinal,
                                 std::vector<std::pair<std::string, GroupPayload>> groups)
    : label_(std::move(label)), ordinal_(ordinal), groups_(std::move(groups)) {}

const GroupPayload* VersionSnapshot::find(std::string_view name) const {
  for (const auto& [n, payload] : groups_)
    if (n == name) return &payload;
  return nullptr;
}

const GroupPayload& VersionSnapshot::group(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw Error(ErrorCode::UnknownGroup,
              "version " + label_ + " has no group '" + std::string(name) + "'");
}

std::vector<std::string_view> split_lines(std::string_view bytes) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? bytes.size() : nl;
    std::string_view line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

std::vector<Digest> normalize_lines(std::string_view bytes) {
  std::vector<Digest> out;
  for (std::string_view line : split_lines(bytes)) out.push_back(digest_bytes(line));
  return out;
}

VersionSnapshot scan_version(const fs::path& source, const std::vector<ExtensionGroup>& groups,
                             std::string label, std::size_t ordinal, Execution exec) {
  std::error_code ec;
  if (!fs::is_directory(source, ec))
    throw Error(ErrorCode::MissingSource, "snapshot source " + source.string() + " not found");

  struct Candidate {
    std::string relpath;
    fs::path path;
    std::size_t group;
  };
  std::vector<Candidate> candidates;
  for (fs::recursive_directory_iterator it(source, ec), end; !ec && it != end; it.increment(ec)) {
    const auto& entry = *it;
    if (entry.is_symlink(ec)) {
      it.disable_recursion_pending();
      continue;
    }
    if (!entry.is_regular_file(ec)) continue;
    const std::string name = entry.path().filename().string();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (groups[g].matches(name)) {
        candidates.push_back({entry.path().lexically_relative(source).generic_string(),
                              entry.path(), g});
        break;
      }
    }
  }
  if (ec) throw Error(ErrorCode::MissingSource, "walking " + source.string() + ": " + ec.message());
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.relpath < b.relpath; });

  std::vector<fs::path> paths;
  paths.reserve(candidates.size());
  for (const auto& c : candidates) paths.push_back(c.path);
  auto digests = exec == Execution::Parallel ? kernels::digest_files_omp(paths)
                                             : kernels::digest_files_serial(paths);

  std::vector<std::vector<FileRecord>> files(groups.size());
  std::vector<std::vector<Digest>> lines(groups.size());
  std::vector<std::size_t> unreadable(groups.size(), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    auto& d = digests[i];
    if (!d.ok) {
      ++unreadable[c.group];
      continue;
    }
    std::string basename = fs::path(c.relpath).filename().string();
    files[c.group].push_back({std::move(basename), c.relpath, d.content});
    auto& pool = lines[c.group];
    pool.insert(pool.end(), d.lines.begin(), d.lines.end());
  }

  std::vector<std::pair<std::string, GroupPayload>> payloads;
  for (std::size_t g = 0; g < groups.size(); ++g)
    payloads.emplace_back(groups[g].name,
                          GroupPayload(std::move(files[g]), std::move(lines[g]), unreadable[g]));
  return VersionSnapshot(std::move(label), ordinal, std::move(payloads));
}

// ---------------------------------------------------------------------------
// Store

void write_group_file(const fs::path& path, const VersionSnapshot& snapshot,
                      const std::string& group) {
  const GroupPayload& payload = snapshot.group(group);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << kSnapshotMagic << ' ' << kSnapshotFormat << ' ' << kDigestAlgorithm << '\n';
  out << "V " << snapshot.ordinal() << ' ' << encode_field(snapshot.label()) << ' '
      << encode_field(group) << '\n';
  out << "U " << payload.unreadable_files() << '\n';
  for (const auto& f : payload.files())
    out << "F " << encode_field(f.basename) << ' ' << encode_field(f.relpath) << ' '
        << f.content_digest.hex() << '\n';
  std::string buf;
  buf.reserve(payload.uloc().size() * 35);
  for (const auto& d : payload.uloc()) {
    buf += "L ";
    buf += d.hex();
    buf += '\n';
  }
  out << buf;
  if (!out) throw Error(ErrorCode::MissingFile, "short write to " + path.string());
}

std::pair<VersionSnapshot, std::string> read_group_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = split_lines(text);
  auto malformed = [&](const std::string& why) {
    return Error(ErrorCode::MalformedInput, path.string() + ": " + why);
  };
  if (lines.size() < 3) throw malformed("truncated snapshot file");

  auto header = split_spaces(lines[0]);
  if (header.size() != 3 || header[0] != kSnapshotMagic) throw malformed("bad header");
  if (header[1] != std::to_string(kSnapshotFormat))
    throw malformed("unsupported format version " + std::string(header[1]));
  if (header[2] != kDigestAlgorithm)
    throw Error(ErrorCode::DigestMismatch, path.string() + " was written with digest '" +
                                               std::string(header[2]) + "', expected '" +
                                               std::string(kDigestAlgorithm) + "'");

  auto v = split_spaces(lines[1]);
  if (v.size() != 4 || v[0] != "V") throw malformed("missing version record");
  auto u = split_spaces(lines[2]);
  if (u.size() != 2 || u[0] != "U") throw malformed("missing unreadable-count record");

  std::size_t ordinal = 0;
  std::size_t unreadable = 0;
  try {
    ordinal = std::stoull(std::string(v[1]));
    unreadable = std::stoull(std::string(u[1]));
  } catch (const std::exception&) {
    throw malformed("bad number");
  }
  std::string label = decode_field(v[2]);
  std::string group = decode_field(v[3]);

  std::vector<FileRecord> files;
  std::vector<Digest> uloc;
  uloc.reserve(lines.size());
  for (std::size_t i = 3; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.starts_with("L ")) {
      uloc.push_back(Digest::from_hex(line.substr(2)));
    } else if (line.starts_with("F ")) {
      auto parts = split_spaces(line);
      if (parts.size() != 4) throw malformed("bad file record");
      files.push_back({decode_field(parts[1]), decode_field(parts[2]), Digest::from_hex(parts[3])});
    } else {
      throw malformed("unknown record '" + std::string(line.substr(0, 2)) + "'");
    }
  }
  std::vector<std::pair<std::string, GroupPayload>> payloads;
  payloads.emplace_back(group, GroupPayload(std::move(files), std::move(uloc), unreadable));
  return {VersionSnapshot(std::move(label), ordinal, std::move(payloads)), group};
}

SnapshotStore SnapshotStore::create(const fs::path& dir, std::string software,
                                    std::vector<ExtensionGroup> groups) {
  if (fs::exists(dir / "index.json")) {
    SnapshotStore existing = open(dir);
    std::vector<std::string> a, b;
    for (const auto& g : existing.groups_) a.push_back(g.name);
    for (const auto& g : groups) b.push_back(g.name);
    if (a != b)
      throw Error(ErrorCode::GroupMismatch, "store " + dir.string() + " holds different groups");
    return existing;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::MissingFile, "cannot create store " + dir.string());
  SnapshotStore store;
  store.dir_ = dir;
  store.software_ = std::move(software);
  store.groups_ = std::move(groups);
  store.write_index();
  return store;
}

SnapshotStore SnapshotStore::open(const fs::path& dir) {
  const fs::path index = dir / "index.json";
  if (!fs::exists(index)) throw Error(ErrorCode::MissingFile, "no store index at " + index.string());
  SnapshotStore store;
  store.dir_ = dir;
  try {
    json doc = json::parse(read_text_file(index));
    if (doc.value("digest_algorithm", std::string{}) != kDigestAlgorithm)
      throw Error(ErrorCode::DigestMismatch,
                  "store " + dir.string() + " uses digest '" +
                      doc.value("digest_algorithm", std::string{}) + "'");
    store.software_ = doc.value("software", std::string{});
    store.groups_ = groups_from_json(doc.at("groups"));
    for (const auto& v : doc.at("versions"))
      store.versions_.push_back({v.at("ordinal").get<std::size_t>(), v.at("label").get<std::string>()});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, index.string() + ": " + e.what());
  }
  std::sort(store.versions_.begin(), store.versions_.end(),
            [](const VersionInfo& a, const VersionInfo& b) { return a.ordinal < b.ordinal; });
  return store;
}

void SnapshotStore::write_index() const {
  json doc;
  doc["schema_version"] = kIndexSchema;
  doc["format"] = std::string(kSnapshotMagic);
  doc["format_version"] = kSnapshotFormat;
  doc["digest_algorithm"] = std::string(kDigestAlgorithm);
  doc["software"] = software_;
  doc["groups"] = groups_to_json(groups_);
  json versions = json::array();
  for (const auto& v : versions_) versions.push_back({{"ordinal", v.ordinal}, {"label", v.label}});
  doc["versions"] = std::move(versions);
  std::ofstream out(dir_ / "index.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write store index in " + dir_.string());
  out << doc.dump(2) << '\n';
}

void SnapshotStore::put(const VersionSnapshot& snapshot) {
  for (const auto& [name, payload] : snapshot.groups()) {
    auto it = std::find_if(groups_.begin(), groups_.end(),
                           [&](const ExtensionGroup& g) { return g.name == name; });
    if (it == groups_.end()) groups_.push_back({name, {}});
    write_group_file(group_file_path(dir_, snapshot.ordinal(), name), snapshot, name);
  }
  auto pos = std::find_if(versions_.begin(), versions_.end(),
                          [&](const VersionInfo& v) { return v.ordinal == snapshot.ordinal(); });
  if (pos != versions_.end()) {
    pos->label = snapshot.label();
  } else {
    versions_.push_back({snapshot.ordinal(), snapshot.label()});
    std::sort(versions_.begin(), versions_.end(),
              [](const VersionInfo& a, const VersionInfo& b) { return a.ordinal < b.ordinal; });
  }
  write_index();
}

VersionSnapshot SnapshotStore::get(std::size_t ordinal) const {
  auto pos = std::find_if(versions_.begin(), versions_.end(),
                          [&](const VersionInfo& v) { return v.ordinal == ordinal; });
  if (pos == versions_.end())
    throw Error(ErrorCode::MissingFile, "store has no version with ordinal " + std::to_string(ordinal));
  std::vector<std::pair<std::string, GroupPayload>> payloads;
  for (const auto& g : groups_) {
    fs::path p = group_file_path(dir_, ordinal, g.name);
    if (!fs::exists(p)) continue;
    auto [snap, name] = read_group_file(p);
    if (snap.ordinal() != ordinal || name != g.name)
      throw Error(ErrorCode::MalformedInput, p.string() + ": record does not match file name");
    payloads.emplace_back(name, snap.group(name));
  }
  return VersionSnapshot(pos->label, ordinal, std::move(payloads));
}

std::vector<VersionSnapshot> SnapshotStore::load_all(Execution exec) const {
  std::vector<VersionSnapshot> out(versions_.size());
  if (exec == Execution::Parallel) {
    std::vector<std::string> errors(versions_.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(versions_.size()); ++i) {
      try {
        out[i] = get(versions_[i].ordinal);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (std::size_t i = 0; i < errors.size(); ++i)
      if (!errors[i].empty()) out[i] = get(versions_[i].ordinal);  // rethrows on this thread
  } else {
    for (std::size_t i = 0; i < versions_.size(); ++i) out[i] = get(versions_[i].ordinal);
  }
  return out;
}

void store_snapshot(const VersionSnapshot& snapshot, const fs::path& store) {
  SnapshotStore s = fs::exists(store / "index.json") ? SnapshotStore::open(store)
                                                     : SnapshotStore::create(store, {}, {});
  s.put(snapshot);
}

VersionSnapshot load_snapshot(const fs::path& store, std::size_t ordinal) {
  return SnapshotStore::open(store).get(ordinal);
}

}  // namespace codesurv
