#include "codesurv/discoverability.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "codesurv/error.hpp"
#include "codesurv/survival.hpp"

namespace codesurv {

Probability discovery_probability(const FitResult& fit, double n) {
  if (!(n >= 0)) throw Error(ErrorCode::InvalidArgument, "offset must be >= 0");
  const double raw = cumulative_change(fit.params, n);
  Probability p;
  p.value = std::clamp(raw, 0.0, 1.0);
  p.clamped = p.value != raw;
  return p;
}

DiscoverabilityBounds bounds(const FitResult& subtle_fit, const FitResult& obvious_fit,
                             std::size_t horizon) {
  if (subtle_fit.group != obvious_fit.group)
    throw Error(ErrorCode::GroupMismatch, "subtle fit is for '" + subtle_fit.group +
                                              "', obvious fit for '" + obvious_fit.group + "'");
  DiscoverabilityBounds b;
  b.horizon = horizon;
  b.group = subtle_fit.group;
  b.subtle_source = subtle_fit.regime;
  b.obvious_source = obvious_fit.regime;
  for (std::size_t n = 0; n <= horizon; ++n) {
    const auto s = discovery_probability(subtle_fit, static_cast<double>(n));
    const auto o = discovery_probability(obvious_fit, static_cast<double>(n));
    b.clamped = b.clamped || s.clamped || o.clamped;
    if (s.value > o.value) b.ordering_violations.push_back(n);
    b.points.push_back({n, s.value, o.value});
  }
  return b;
}

PersistenceSummary persistence_summary(const FitResult& fit, std::size_t horizon) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  PersistenceSummary s;
  s.metric = fit.metric;
  std::vector<std::size_t> at{1, 2, 5, 10, horizon};
  std::sort(at.begin(), at.end());
  at.erase(std::unique(at.begin(), at.end()), at.end());
  for (auto n : at) {
    if (n > horizon) continue;
    const auto p = discovery_probability(fit, static_cast<double>(n));
    s.clamped = s.clamped || p.clamped;
    s.checkpoints.emplace_back(n, p.value);
  }
  const double saturation = fit.params.saturation();
  s.undiscovered_mass = std::max(0.0, 1.0 - std::min(saturation, 1.0));
  // P(n) >= 0.5 is reachable only when A > 0.5; solve, then confirm on integers.
  if (saturation > 0.5) {
    const double exact = -std::log1p(-0.5 / saturation) / fit.params.rate();
    std::size_t n = exact > 1.0 ? static_cast<std::size_t>(std::floor(exact)) - 1 : 0;
    while (discovery_probability(fit, static_cast<double>(n)).value < 0.5) ++n;
    s.median_crossing = n;
  }
  return s;
}

double removal_hazard(const SaturationParams& params, double n) {
  return instantaneous_rate(params, n) / (1.0 - cumulative_change(params, n));
}

void write_bounds_csv(const DiscoverabilityBounds& b, std::ostream& out) {
  out << "n,subtle_P,obvious_P\n";
  for (const auto& p : b.points)
    out << p.n << ',' << format_double(p.subtle) << ',' << format_double(p.obvious) << '\n';
}

std::string summary_to_json(const PersistenceSummary& s, int indent) {
  nlohmann::json doc;
  doc["metric"] = to_string(s.metric);
  doc["checkpoints"] = nlohmann::json::array();
  for (auto [n, p] : s.checkpoints) doc["checkpoints"].push_back({{"n", n}, {"P", p}});
  doc["median_crossing"] = s.median_crossing ? nlohmann::json(*s.median_crossing) : nlohmann::json();
  doc["undiscovered_mass"] = s.undiscovered_mass;
  doc["clamped"] = s.clamped;
  return doc.dump(indent);
}

}  // namespace codesurv
