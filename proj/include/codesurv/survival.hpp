#pragma once

// Changed-fraction curves from every baseline version to every later one.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "codesurv/corpus.hpp"
#include "codesurv/kernels.hpp"

namespace codesurv {

const char* to_string(MetricKind metric);
MetricKind parse_metric(std::string_view text);  // "uloc" | "file"

struct CurvePoint {
  std::size_t offset = 0;        // n >= 1
  double changed_fraction = 0;   // P in [0, 1]

  bool operator==(const CurvePoint&) const = default;
};

struct ChangeCurve {
  std::size_t baseline_ordinal = 0;
  std::string baseline_label;
  MetricKind metric = MetricKind::ULOC;
  std::string group;
  std::size_t baseline_size = 0;
  std::vector<CurvePoint> points;  // offsets 1, 2, ... without gaps

  bool operator==(const ChangeCurve&) const = default;
};

struct CurveFamily {
  std::string software;
  std::string group;
  MetricKind metric = MetricKind::ULOC;
  std::size_t version_count = 0;
  std::vector<std::string> version_labels;  // indexed by ordinal
  std::vector<ChangeCurve> curves;          // ascending baseline ordinal
  std::vector<std::string> warnings;        // omitted curves and similar

  const ChangeCurve* curve_for(std::size_t baseline) const;
  bool operator==(const CurveFamily&) const = default;
};

// 1 - |base ∩ later| / |base| over the group's uLOC sets.
double uloc_changed_fraction(const VersionSnapshot& base, const VersionSnapshot& later,
                             std::string_view group);

// A baseline file survives when the later version holds a file with the same
// basename and identical content, wherever it lives in the tree.
double file_changed_fraction(const VersionSnapshot& base, const VersionSnapshot& later,
                             std::string_view group);

// `versions` must be ordered by ordinal 0..k-1.
CurveFamily build_curve_family(const std::vector<VersionSnapshot>& versions,
                               std::string_view group, MetricKind metric,
                               Execution exec = Execution::Parallel);
CurveFamily build_curve_family(const SnapshotStore& store, std::string_view group,
                               MetricKind metric, Execution exec = Execution::Parallel);

// CSV columns: group,metric,baseline_ordinal,baseline_label,baseline_size,
// offset,target_label,changed_fraction. Fractions use 17 significant digits.
void write_curves_csv(const CurveFamily& family, std::ostream& out);
void write_curves_csv(const CurveFamily& family, const fs::path& path);
CurveFamily read_curves_csv(std::istream& in);
CurveFamily read_curves_csv(const fs::path& path);

// Shared CSV helpers.
std::string csv_escape(std::string_view field);
std::vector<std::string> csv_split(std::string_view line);
std::string format_double(double v);  // shortest round-trip form

}  // namespace codesurv
