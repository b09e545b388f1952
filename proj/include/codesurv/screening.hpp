#pragma once

// Data selection before fitting: the pre-stabilisation cut, discontinuous
// jump events and regime splits.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "codesurv/survival.hpp"

namespace codesurv {

enum class JumpKind { Isolated, RegimeChange };
const char* to_string(JumpKind kind);

struct JumpEvent {
  std::string group;
  MetricKind metric = MetricKind::ULOC;
  std::size_t ordinal = 0;  // version at which the jump lands
  double magnitude = 0;     // excess changed fraction over the local trend
  JumpKind kind = JumpKind::Isolated;
  std::size_t support = 0;  // curves that flagged this version
  std::size_t crossing = 0; // analysed curves crossing it
};

struct JumpDetectionOptions {
  double abs_threshold = 0.05;
  double rel_factor = 5.0;
  double persist_factor = 2.0;  // post/pre consecutive-rate ratio for a regime change
};

struct JumpDetection {
  std::vector<JumpEvent> events;
  std::vector<std::size_t> short_curves;  // baselines with < 3 points, not analysed
};

JumpDetection detect_jumps(const CurveFamily& family, const JumpDetectionOptions& options = {});

// Smallest baseline whose first changed fraction lies within a factor
// `rel_factor` of the median over the `trailing_window` latest curves.
std::size_t detect_stabilization(const CurveFamily& family, std::size_t trailing_window = 5,
                                 double rel_factor = 2.0);

enum class PlanProvenance { Manual, Heuristic };

struct ScreeningPlan {
  std::size_t stabilization_cut = 0;
  std::vector<std::size_t> excluded;  // isolated jump versions
  std::vector<std::size_t> splits;    // regime boundaries, strictly increasing
  PlanProvenance provenance = PlanProvenance::Manual;
  std::optional<std::string> group;
  std::optional<MetricKind> metric;
};

// Plan file as written on disk: versions may be given by label or ordinal.
using VersionRef = std::variant<std::size_t, std::string>;

struct PlanFile {
  std::optional<VersionRef> cut;
  std::vector<VersionRef> exclude;
  std::vector<VersionRef> splits;
  std::optional<std::string> group;
  std::optional<MetricKind> metric;
  std::string note;
};

PlanFile parse_plan(std::string_view json_text);
PlanFile load_plan(const fs::path& path);
// Resolves labels against the family; throws PlanMismatch for unknown labels
// or a group/metric that disagrees with the family.
ScreeningPlan resolve_plan(const PlanFile& plan, const CurveFamily& family);
std::string plan_to_json(const ScreeningPlan& plan, const CurveFamily& family);

// Heuristic plan from detect_stabilization and detect_jumps.
ScreeningPlan heuristic_plan(const CurveFamily& family, const JumpDetectionOptions& options = {},
                             std::size_t trailing_window = 5);

struct FitPoint {
  double n = 0;
  double p = 0;
  std::size_t baseline = 0;
  std::size_t target = 0;

  bool operator==(const FitPoint&) const = default;
};

struct FitPointSet {
  std::string regime;  // e.g. "[3,47)"
  std::size_t first_version = 0;
  std::size_t end_version = 0;  // exclusive
  std::vector<FitPoint> points;
  std::size_t curves_used = 0;
  std::size_t points_dropped = 0;
};

// Pools every retained (baseline, target) point. A point is dropped when its
// baseline precedes the cut, when it spans an excluded version e
// (baseline < e <= target), or when it spans a regime split.
std::vector<FitPointSet> apply_plan(const CurveFamily& family, const ScreeningPlan& plan);

}  // namespace codesurv
