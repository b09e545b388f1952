#include "codesurv/screening.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "codesurv/error.hpp"

namespace codesurv {
namespace {

using json = nlohmann::json;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

std::string regime_label(const CurveFamily& family, std::size_t first, std::size_t end) {
  auto label = [&](std::size_t o) {
    return o < family.version_labels.size() ? family.version_labels[o] : "#" + std::to_string(o);
  };
  return label(first) + ".." + label(end - 1);
}

}  // namespace

const char* to_string(JumpKind kind) {
  return kind == JumpKind::Isolated ? "isolated" : "regime-change";
}

JumpDetection detect_jumps(const CurveFamily& family, const JumpDetectionOptions& options) {
  if (family.curves.empty()) throw Error(ErrorCode::TooFewVersions, "empty curve family");
  if (!(options.abs_threshold > 0)) throw Error(ErrorCode::InvalidArgument, "abs_threshold must be > 0");
  if (!(options.rel_factor > 1)) throw Error(ErrorCode::InvalidArgument, "rel_factor must be > 1");

  JumpDetection out;
  // First differences d(n) = P(n) - P(n-1) for n >= 2, keyed by curve.
  std::vector<const ChangeCurve*> analysed;
  for (const auto& c : family.curves) {
    if (c.points.size() < 3) {
      out.short_curves.push_back(c.baseline_ordinal);
      continue;
    }
    analysed.push_back(&c);
  }
  auto diff = [](const ChangeCurve& c, std::size_t n) {  // n >= 2
    return c.points[n - 1].changed_fraction - c.points[n - 2].changed_fraction;
  };

  // Cross-curve trend of the first difference at each offset.
  std::size_t max_n = 0;
  for (const auto* c : analysed) max_n = std::max(max_n, c->points.size());
  std::vector<double> trend(max_n + 1, 0.0);
  for (std::size_t n = 2; n <= max_n; ++n) {
    std::vector<double> at;
    for (const auto* c : analysed)
      if (c->points.size() >= n) at.push_back(diff(*c, n));
    trend[n] = median(std::move(at));
  }

  const std::size_t k = family.version_count;
  std::vector<std::size_t> crossing(k, 0), flagged(k, 0);
  std::vector<std::vector<double>> excesses(k);
  for (const auto* c : analysed) {
    const std::size_t len = c->points.size();
    std::vector<double> excess(len + 1, 0.0);
    for (std::size_t n = 2; n <= len; ++n) excess[n] = diff(*c, n) - trend[n];
    for (std::size_t n = 2; n <= len; ++n) {
      std::vector<double> others;
      for (std::size_t m = 2; m <= len; ++m)
        if (m != n) others.push_back(std::abs(excess[m]));
      const double scale = median(std::move(others));
      const std::size_t target = c->baseline_ordinal + n;
      if (target >= k) continue;
      ++crossing[target];
      if (excess[n] > options.abs_threshold && excess[n] > options.rel_factor * scale) {
        ++flagged[target];
        excesses[target].push_back(excess[n]);
      }
    }
  }

  // Version-to-version change series c_j = P_{j-1}(1).
  std::map<std::size_t, double> step;
  for (const auto& c : family.curves)
    if (!c.points.empty()) step[c.baseline_ordinal + 1] = c.points.front().changed_fraction;

  for (std::size_t j = 0; j < k; ++j) {
    if (flagged[j] == 0 || 2 * flagged[j] <= crossing[j]) continue;
    JumpEvent ev;
    ev.group = family.group;
    ev.metric = family.metric;
    ev.ordinal = j;
    ev.magnitude = median(excesses[j]);
    ev.support = flagged[j];
    ev.crossing = crossing[j];
    std::vector<double> before, after;
    for (const auto& [t, v] : step) {
      if (t < j) before.push_back(v);
      if (t > j) after.push_back(v);
    }
    if (after.size() >= 2 && !before.empty()) {
      const double pre = median(before);
      const double post = median(after);
      if (post > 0 && post >= options.persist_factor * pre) ev.kind = JumpKind::RegimeChange;
    }
    out.events.push_back(std::move(ev));
  }

  // A permanent rise in the version-to-version rate bends the curves without
  // a single large difference, so it is also sought as a step in c_j.
  std::vector<std::pair<std::size_t, double>> series(step.begin(), step.end());
  bool in_run = false;
  for (std::size_t s = 3; s + 3 <= series.size(); ++s) {
    std::vector<double> before, after;
    for (std::size_t t = 0; t < s; ++t) before.push_back(series[t].second);
    for (std::size_t t = s; t < series.size(); ++t) after.push_back(series[t].second);
    const double pre = median(std::move(before));
    const double post = median(std::move(after));
    const bool rise = post - pre > options.abs_threshold && post >= options.persist_factor * pre &&
                      series[s].second - pre > options.abs_threshold;
    if (rise && !in_run) {
      const std::size_t j = series[s].first;
      auto it = std::find_if(out.events.begin(), out.events.end(),
                             [&](const JumpEvent& e) { return e.ordinal == j; });
      if (it != out.events.end()) {
        it->kind = JumpKind::RegimeChange;
      } else {
        JumpEvent ev;
        ev.group = family.group;
        ev.metric = family.metric;
        ev.ordinal = j;
        ev.magnitude = post - pre;
        ev.kind = JumpKind::RegimeChange;
        ev.support = flagged[j];
        ev.crossing = crossing[j];
        out.events.push_back(std::move(ev));
      }
    }
    in_run = rise;
  }
  std::sort(out.events.begin(), out.events.end(),
            [](const JumpEvent& a, const JumpEvent& b) { return a.ordinal < b.ordinal; });
  return out;
}

std::size_t detect_stabilization(const CurveFamily& family, std::size_t trailing_window,
                                 double rel_factor) {
  if (trailing_window == 0) throw Error(ErrorCode::InvalidArgument, "trailing_window must be >= 1");
  if (!(rel_factor > 1)) throw Error(ErrorCode::InvalidArgument, "rel_factor must be > 1");
  std::vector<const ChangeCurve*> usable;
  for (const auto& c : family.curves)
    if (!c.points.empty()) usable.push_back(&c);
  if (usable.size() < trailing_window + 2)
    throw Error(ErrorCode::TooFewVersions,
                "stabilization needs at least " + std::to_string(trailing_window + 2) + " curves, have " +
                    std::to_string(usable.size()));

  std::vector<double> tail;
  for (std::size_t i = usable.size() - trailing_window; i < usable.size(); ++i)
    tail.push_back(usable[i]->points.front().changed_fraction);
  const double ref = median(std::move(tail));
  for (const auto* c : usable) {
    const double v = c->points.front().changed_fraction;
    if (v <= ref * rel_factor && v * rel_factor >= ref) return c->baseline_ordinal;
  }
  return usable[usable.size() - trailing_window]->baseline_ordinal;
}

ScreeningPlan heuristic_plan(const CurveFamily& family, const JumpDetectionOptions& options,
                             std::size_t trailing_window) {
  ScreeningPlan plan;
  plan.provenance = PlanProvenance::Heuristic;
  plan.group = family.group;
  plan.metric = family.metric;
  const JumpDetection jumps = detect_jumps(family, options);
  // Stabilisation is judged against the first regime only; a later regime
  // with a higher rate would otherwise pull the reference upwards.
  CurveFamily first_regime = family;
  for (const auto& ev : jumps.events) {
    if (ev.kind != JumpKind::RegimeChange) continue;
    std::erase_if(first_regime.curves, [&](const ChangeCurve& c) { return c.baseline_ordinal + 1 >= ev.ordinal; });
    break;
  }
  try {
    plan.stabilization_cut = detect_stabilization(first_regime, trailing_window);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewVersions) throw;
  }
  for (const auto& ev : jumps.events) {
    if (ev.ordinal <= plan.stabilization_cut) continue;
    if (ev.kind == JumpKind::RegimeChange)
      plan.splits.push_back(ev.ordinal);
    else
      plan.excluded.push_back(ev.ordinal);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Plan files

PlanFile parse_plan(std::string_view json_text) {
  PlanFile plan;
  try {
    json doc = json::parse(json_text);
    if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "plan must be a JSON object");
    auto ref = [](const json& v) -> VersionRef {
      if (v.is_number_unsigned()) return v.get<std::size_t>();
      if (v.is_string()) return v.get<std::string>();
      throw Error(ErrorCode::MalformedInput, "plan versions must be ordinals or label strings");
    };
    if (doc.contains("cut") && !doc["cut"].is_null()) plan.cut = ref(doc["cut"]);
    for (const auto& v : doc.value("exclude", json::array())) plan.exclude.push_back(ref(v));
    for (const auto& v : doc.value("splits", json::array())) plan.splits.push_back(ref(v));
    if (doc.contains("group") && !doc["group"].is_null()) plan.group = doc["group"].get<std::string>();
    if (doc.contains("metric") && !doc["metric"].is_null())
      plan.metric = parse_metric(doc["metric"].get<std::string>());
    plan.note = doc.value("note", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("plan: ") + e.what());
  }
  return plan;
}

PlanFile load_plan(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open plan " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

ScreeningPlan resolve_plan(const PlanFile& file, const CurveFamily& family) {
  if (file.group && *file.group != family.group)
    throw Error(ErrorCode::PlanMismatch,
                "plan is for group '" + *file.group + "', curves are '" + family.group + "'");
  if (file.metric && *file.metric != family.metric)
    throw Error(ErrorCode::PlanMismatch, std::string("plan is for metric '") + to_string(*file.metric) +
                                             "', curves are '" + to_string(family.metric) + "'");
  auto resolve = [&](const VersionRef& r) -> std::size_t {
    if (const auto* o = std::get_if<std::size_t>(&r)) {
      if (*o >= family.version_count)
        throw Error(ErrorCode::PlanMismatch, "plan ordinal " + std::to_string(*o) + " out of range");
      return *o;
    }
    const auto& label = std::get<std::string>(r);
    auto it = std::find(family.version_labels.begin(), family.version_labels.end(), label);
    if (it == family.version_labels.end())
      throw Error(ErrorCode::PlanMismatch, "plan names unknown version '" + label + "'");
    return static_cast<std::size_t>(it - family.version_labels.begin());
  };
  ScreeningPlan plan;
  plan.provenance = PlanProvenance::Manual;
  plan.group = file.group;
  plan.metric = file.metric;
  if (file.cut) plan.stabilization_cut = resolve(*file.cut);
  for (const auto& r : file.exclude) plan.excluded.push_back(resolve(r));
  for (const auto& r : file.splits) plan.splits.push_back(resolve(r));
  std::sort(plan.excluded.begin(), plan.excluded.end());
  plan.excluded.erase(std::unique(plan.excluded.begin(), plan.excluded.end()), plan.excluded.end());
  return plan;
}

std::string plan_to_json(const ScreeningPlan& plan, const CurveFamily& family) {
  auto entry = [&](std::size_t o) {
    return json{{"ordinal", o},
                {"label", o < family.version_labels.size() ? family.version_labels[o] : ""}};
  };
  json doc;
  doc["provenance"] = plan.provenance == PlanProvenance::Manual ? "manual" : "heuristic";
  doc["cut"] = entry(plan.stabilization_cut);
  doc["exclude"] = json::array();
  for (auto e : plan.excluded) doc["exclude"].push_back(entry(e));
  doc["splits"] = json::array();
  for (auto s : plan.splits) doc["splits"].push_back(entry(s));
  return doc.dump();
}

// ---------------------------------------------------------------------------

std::vector<FitPointSet> apply_plan(const CurveFamily& family, const ScreeningPlan& plan) {
  const std::size_t k = family.version_count;
  if (plan.group && *plan.group != family.group)
    throw Error(ErrorCode::PlanMismatch, "plan group does not match curve family");
  if (plan.metric && *plan.metric != family.metric)
    throw Error(ErrorCode::PlanMismatch, "plan metric does not match curve family");
  if (plan.stabilization_cut >= k)
    throw Error(ErrorCode::PlanMismatch, "stabilization cut beyond the last version");
  for (auto e : plan.excluded)
    if (e >= k) throw Error(ErrorCode::PlanMismatch, "excluded version out of range");
  for (std::size_t i = 0; i < plan.splits.size(); ++i) {
    if (plan.splits[i] >= k || plan.splits[i] <= plan.stabilization_cut)
      throw Error(ErrorCode::PlanMismatch, "regime split must lie after the cut and within range");
    if (i > 0 && plan.splits[i] <= plan.splits[i - 1])
      throw Error(ErrorCode::PlanMismatch, "regime splits must be strictly increasing");
  }

  std::vector<std::size_t> bounds{plan.stabilization_cut};
  bounds.insert(bounds.end(), plan.splits.begin(), plan.splits.end());
  bounds.push_back(k);
  std::vector<FitPointSet> sets(bounds.size() - 1);
  for (std::size_t r = 0; r + 1 < bounds.size(); ++r) {
    sets[r].first_version = bounds[r];
    sets[r].end_version = bounds[r + 1];
    sets[r].regime = regime_label(family, bounds[r], bounds[r + 1]);
  }
  auto regime_of = [&](std::size_t v) -> std::size_t {  // v >= cut
    return static_cast<std::size_t>(std::upper_bound(bounds.begin() + 1, bounds.end() - 1, v) -
                                    (bounds.begin() + 1));
  };

  for (const auto& c : family.curves) {
    const std::size_t i = c.baseline_ordinal;
    if (i < plan.stabilization_cut) {
      sets.front().points_dropped += c.points.size();
      continue;
    }
    FitPointSet& set = sets[regime_of(i)];
    bool used = false;
    for (const auto& p : c.points) {
      const std::size_t j = i + p.offset;
      const bool spans_excluded = std::any_of(plan.excluded.begin(), plan.excluded.end(),
                                              [&](std::size_t e) { return i < e && e <= j; });
      if (spans_excluded || j >= k || regime_of(j) != regime_of(i)) {
        ++set.points_dropped;
        continue;
      }
      set.points.push_back({static_cast<double>(p.offset), p.changed_fraction, i, j});
      used = true;
    }
    if (used) ++set.curves_used;
  }

  std::vector<FitPointSet> out;
  for (auto& s : sets)
    if (!s.points.empty()) out.push_back(std::move(s));
  if (out.empty()) throw Error(ErrorCode::NothingToFit, "screening plan leaves no points to fit");
  return out;
}

}  // namespace codesurv
