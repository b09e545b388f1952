#pragma once

// Bounds on the probability that an in-code vulnerability has been touched,
// and thereby exposed or removed, n releases after it was introduced.
//   subtle  = the vulnerable line itself must change (uLOC fit), lower bound
//   obvious = any change to the containing file suffices (file fit), upper bound

#include <optional>
#include <string>
#include <vector>

#include "codesurv/fitting.hpp"

namespace codesurv {

struct Probability {
  double value = 0;      // in [0, 1]
  bool clamped = false;  // the model value fell outside [0, 1]
};

Probability discovery_probability(const FitResult& fit, double n);

struct BoundsPoint {
  std::size_t n = 0;
  double subtle = 0;
  double obvious = 0;
};

struct DiscoverabilityBounds {
  std::size_t horizon = 0;
  std::string group;
  std::string subtle_source;   // regime label of the uLOC fit
  std::string obvious_source;  // regime label of the file fit
  std::vector<BoundsPoint> points;  // n = 0..horizon
  bool clamped = false;
  std::vector<std::size_t> ordering_violations;  // offsets where subtle > obvious
};

// Throws GroupMismatch when the two fits name different groups.
DiscoverabilityBounds bounds(const FitResult& subtle_fit, const FitResult& obvious_fit,
                             std::size_t horizon);

struct PersistenceSummary {
  MetricKind metric = MetricKind::ULOC;
  std::vector<std::pair<std::size_t, double>> checkpoints;  // offsets 1, 2, 5, 10, horizon
  std::optional<std::size_t> median_crossing;  // first n with P >= 0.5
  double undiscovered_mass = 0;                // max(0, 1 - min(A, 1))
  bool clamped = false;
};

PersistenceSummary persistence_summary(const FitResult& fit, std::size_t horizon);

// Conditional per-version removal hazard p(n) / (1 - P(n)).
double removal_hazard(const SaturationParams& params, double n);

void write_bounds_csv(const DiscoverabilityBounds& b, std::ostream& out);
std::string summary_to_json(const PersistenceSummary& s, int indent = -1);

}  // namespace codesurv
