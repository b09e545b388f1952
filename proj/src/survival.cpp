#include "codesurv/survival.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "codesurv/error.hpp"

namespace codesurv {

const char* to_string(MetricKind metric) {
  return metric == MetricKind::ULOC ? "uloc" : "file";
}

MetricKind parse_metric(std::string_view text) {
  if (text == "uloc" || text == "ULOC") return MetricKind::ULOC;
  if (text == "file" || text == "FILE" || text == "files") return MetricKind::FILE;
  throw Error(ErrorCode::InvalidArgument, "metric must be 'uloc' or 'file', got '" +
                                              std::string(text) + "'");
}

const ChangeCurve* CurveFamily::curve_for(std::size_t baseline) const {
  for (const auto& c : curves)
    if (c.baseline_ordinal == baseline) return &c;
  return nullptr;
}

double uloc_changed_fraction(const VersionSnapshot& base, const VersionSnapshot& later,
                             std::string_view group) {
  const auto& b = base.group(group);
  const auto& l = later.group(group);
  if (b.uloc_count() == 0)
    throw Error(ErrorCode::EmptyBaseline, "version " + base.label() + " has no uLOC in '" +
                                              std::string(group) + "'");
  auto kept = kernels::intersection_count(b.uloc(), l.uloc());
  return 1.0 - static_cast<double>(kept) / static_cast<double>(b.uloc_count());
}

double file_changed_fraction(const VersionSnapshot& base, const VersionSnapshot& later,
                             std::string_view group) {
  const auto& b = base.group(group);
  const auto& l = later.group(group);
  if (b.file_count() == 0)
    throw Error(ErrorCode::EmptyBaseline, "version " + base.label() + " has no files in '" +
                                              std::string(group) + "'");
  std::vector<FileRecord> sorted = l.files();
  std::sort(sorted.begin(), sorted.end(), [](const FileRecord& x, const FileRecord& y) {
    return std::tie(x.basename, x.content_digest) < std::tie(y.basename, y.content_digest);
  });
  auto kept = kernels::unchanged_file_count(b.files(), sorted);
  return 1.0 - static_cast<double>(kept) / static_cast<double>(b.file_count());
}

CurveFamily build_curve_family(const std::vector<VersionSnapshot>& versions,
                               std::string_view group, MetricKind metric, Execution exec) {
  const std::size_t k = versions.size();
  if (k < 2) throw Error(ErrorCode::TooFewVersions, "curve building needs at least 2 versions");

  static const GroupPayload kEmpty;
  std::vector<const GroupPayload*> payloads;
  payloads.reserve(k);
  bool any = false;
  for (std::size_t i = 0; i < k; ++i) {
    if (versions[i].ordinal() != i)
      throw Error(ErrorCode::MalformedInput, "versions must be ordered by ordinal 0..k-1");
    const GroupPayload* p = versions[i].find(group);
    any = any || p != nullptr;
    payloads.push_back(p ? p : &kEmpty);
  }
  if (!any) {
    std::string names;
    for (const auto& [name, payload] : versions.front().groups()) names += (names.empty() ? "" : ", ") + name;
    throw Error(ErrorCode::UnknownGroup,
                "no version holds group '" + std::string(group) + "' (available: " + names + ")");
  }

  auto fractions = exec == Execution::Parallel ? kernels::pairwise_fractions_omp(payloads, metric)
                                               : kernels::pairwise_fractions_serial(payloads, metric);

  CurveFamily family;
  family.group = std::string(group);
  family.metric = metric;
  family.version_count = k;
  for (const auto& v : versions) family.version_labels.push_back(v.label());
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const auto size = metric == MetricKind::ULOC ? payloads[i]->uloc_count() : payloads[i]->file_count();
    if (size == 0) {
      family.warnings.push_back("EmptyBaseline: curve from " + versions[i].label() +
                                " omitted (no " + (metric == MetricKind::ULOC ? "uLOC" : "files") +
                                " in group '" + family.group + "')");
      continue;
    }
    ChangeCurve curve;
    curve.baseline_ordinal = i;
    curve.baseline_label = versions[i].label();
    curve.metric = metric;
    curve.group = family.group;
    curve.baseline_size = size;
    for (std::size_t j = i + 1; j < k; ++j)
      curve.points.push_back({j - i, fractions[kernels::pair_index(i, j, k)]});
    family.curves.push_back(std::move(curve));
  }
  return family;
}

CurveFamily build_curve_family(const SnapshotStore& store, std::string_view group,
                               MetricKind metric, Execution exec) {
  if (std::none_of(store.groups().begin(), store.groups().end(),
                   [&](const ExtensionGroup& g) { return g.name == group; })) {
    std::string names;
    for (const auto& g : store.groups()) names += (names.empty() ? "" : ", ") + g.name;
    throw Error(ErrorCode::UnknownGroup,
                "group '" + std::string(group) + "' not in store (available: " + names + ")");
  }
  const auto& infos = store.versions();
  for (std::size_t i = 0; i < infos.size(); ++i)
    if (infos[i].ordinal != i)
      throw Error(ErrorCode::MalformedInput, "store ordinals are not contiguous from 0");
  auto family = build_curve_family(store.load_all(exec), group, metric, exec);
  family.software = store.software();
  return family;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

namespace {
constexpr std::string_view kCurvesHeader =
    "group,metric,baseline_ordinal,baseline_label,baseline_size,offset,target_label,changed_fraction";
}

void write_curves_csv(const CurveFamily& family, std::ostream& out) {
  out << kCurvesHeader << '\n';
  for (const auto& c : family.curves) {
    for (const auto& p : c.points) {
      const std::size_t target = c.baseline_ordinal + p.offset;
      const std::string target_label =
          target < family.version_labels.size() ? family.version_labels[target] : std::string{};
      out << csv_escape(family.group) << ',' << to_string(family.metric) << ','
          << c.baseline_ordinal << ',' << csv_escape(c.baseline_label) << ',' << c.baseline_size
          << ',' << p.offset << ',' << csv_escape(target_label) << ','
          << format_double(p.changed_fraction) << '\n';
    }
  }
}

void write_curves_csv(const CurveFamily& family, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  write_curves_csv(family, out);
}

CurveFamily read_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedInput, "curves CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurvesHeader) throw Error(ErrorCode::MalformedInput, "unexpected curves CSV header");

  CurveFamily family;
  std::map<std::size_t, std::string> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = csv_split(line);
    auto bad = [&](const std::string& why) {
      return Error(ErrorCode::MalformedInput, "curves CSV row " + std::to_string(row) + ": " + why);
    };
    if (f.size() != 8) throw bad("expected 8 fields");
    std::size_t baseline = 0, size = 0, offset = 0;
    double fraction = 0;
    try {
      baseline = std::stoull(f[2]);
      size = std::stoull(f[4]);
      offset = std::stoull(f[5]);
      fraction = std::stod(f[7]);
    } catch (const std::exception&) {
      throw bad("bad number");
    }
    if (offset == 0) throw bad("offset must be >= 1");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw bad("changed_fraction outside [0,1]");
    const MetricKind metric = parse_metric(f[1]);
    if (family.curves.empty()) {
      family.group = f[0];
      family.metric = metric;
    } else if (f[0] != family.group || metric != family.metric) {
      throw bad("mixed group/metric in one curves file");
    }
    labels[baseline] = f[3];
    if (!f[6].empty()) labels[baseline + offset] = f[6];

    if (family.curves.empty() || family.curves.back().baseline_ordinal != baseline) {
      if (!family.curves.empty() && family.curves.back().baseline_ordinal > baseline)
        throw bad("baselines must be ascending");
      ChangeCurve c;
      c.baseline_ordinal = baseline;
      c.baseline_label = f[3];
      c.metric = metric;
      c.group = f[0];
      c.baseline_size = size;
      family.curves.push_back(std::move(c));
    }
    auto& c = family.curves.back();
    if (offset != c.points.size() + 1) throw bad("offsets must run 1, 2, ... without gaps");
    c.points.push_back({offset, fraction});
  }
  if (family.curves.empty()) throw Error(ErrorCode::MalformedInput, "curves CSV has no rows");

  std::size_t last = labels.empty() ? 0 : labels.rbegin()->first;
  family.version_count = last + 1;
  family.version_labels.resize(family.version_count);
  for (auto& [ord, label] : labels) family.version_labels[ord] = label;
  for (std::size_t i = 0; i < family.version_labels.size(); ++i)
    if (family.version_labels[i].empty()) family.version_labels[i] = "#" + std::to_string(i);
  return family;
}

CurveFamily read_curves_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  return read_curves_csv(in);
}

}  // namespace codesurv
