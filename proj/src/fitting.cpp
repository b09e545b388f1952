#include "codesurv/fitting.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <json.hpp>

#include "codesurv/error.hpp"

namespace codesurv {
namespace {

using json = nlohmann::json;

constexpr double kVarianceFloor = 1e-12;
constexpr int kFitSchema = 1;

double sum_squared_residuals(double saturation, double rate, std::span<const FitPoint> points) {
  double sse = 0;
  for (const auto& pt : points) {
    const double r = pt.p + saturation * std::expm1(-rate * pt.n);
    sse += r * r;
  }
  return sse;
}

double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Uniform draw in [-1, 1) from the raw engine output; std::uniform_real_distribution
// is not specified bit-for-bit across standard libraries.
double jitter(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace

void FitConfig::validate() const {
  if (!(a_max > 0 && std::isfinite(a_max))) throw Error(ErrorCode::InvalidArgument, "A_max must be > 0");
  simplex.validate();
}

const char* to_string(FitWarning w) {
  switch (w) {
    case FitWarning::LinearRegime: return "LinearRegime";
    case FitWarning::NearBoundary: return "NearBoundary";
    case FitWarning::NotConverged: return "NotConverged";
  }
  return "?";
}

bool FitResult::has(FitWarning w) const {
  return std::find(warnings.begin(), warnings.end(), w) != warnings.end();
}

double log_likelihood(const SaturationParams& params, std::span<const FitPoint> points) {
  if (points.size() < 2) throw Error(ErrorCode::TooFewPoints, "log-likelihood needs at least 2 points");
  const double m = static_cast<double>(points.size());
  const double s2 = std::max(sum_squared_residuals(params.saturation(), params.rate(), points) / m,
                             kVarianceFloor);
  return -0.5 * m * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
}

double log_likelihood(const SaturationParams& params, const FitPointSet& points) {
  return log_likelihood(params, std::span<const FitPoint>(points.points));
}

FitResult fit_saturation(const FitPointSet& set, const FitConfig& config) {
  config.validate();
  const std::span<const FitPoint> points(set.points);
  std::set<double> offsets;
  double max_p = 0;
  for (const auto& pt : points) {
    offsets.insert(pt.n);
    max_p = std::max(max_p, pt.p);
  }
  if (points.size() < 3 || offsets.size() < 2)
    throw Error(ErrorCode::TooFewPoints, "fit needs >= 3 points over >= 2 distinct offsets (regime " +
                                             set.regime + ")");
  if (max_p <= 0) throw Error(ErrorCode::NoChangeObserved, "every changed fraction is zero (regime " +
                                                                set.regime + ")");

  const double a_max = config.a_max;
  const double m = static_cast<double>(points.size());
  auto unpack = [a_max](std::span<const double> x) {
    return std::pair{a_max * logistic(x[0]), std::exp(x[1])};
  };
  // Profiled negative log-likelihood up to a constant.
  const Objective objective = [&](std::span<const double> x) {
    auto [saturation, rate] = unpack(x);
    const double sse = sum_squared_residuals(saturation, rate, points);
    return 0.5 * m * std::log(std::max(sse / m, kVarianceFloor));
  };

  // Start: A0 from the largest observation, lambda0 by inverting the model at
  // the earliest offset.
  const double n1 = *offsets.begin();
  double p1 = 0, count1 = 0;
  for (const auto& pt : points)
    if (pt.n == n1) {
      p1 += pt.p;
      ++count1;
    }
  p1 /= count1;
  const double a0 = std::min(max_p * 1.2, 0.95 * a_max);
  const double ratio = std::min(p1 / a0, 0.999);
  const double lambda0 = std::max(ratio > 0 ? -std::log1p(-ratio) / n1 : 0.0, 1e-4);
  const double u0 = a0 / a_max;
  std::vector<double> start{std::log(u0 / (1.0 - u0)), std::log(lambda0)};

  NelderMeadResult best = neldermead_minimize(objective, start, config.simplex);
  std::mt19937_64 rng(config.seed);
  for (std::size_t r = 0; r < config.restarts; ++r) {
    std::vector<double> jittered = best.argmin;
    for (auto& v : jittered) v += 0.5 * jitter(rng);
    if (!std::isfinite(objective(jittered))) continue;
    NelderMeadResult run = neldermead_minimize(objective, jittered, config.simplex);
    if (run.value < best.value) best = std::move(run);  // ties keep the earlier run
  }

  auto [saturation, rate] = unpack(best.argmin);
  saturation = std::clamp(saturation, DBL_MIN, a_max);
  rate = std::max(rate, DBL_MIN);

  FitResult fit;
  fit.params = SaturationParams(saturation, rate);
  fit.log_likelihood = log_likelihood(fit.params, points);
  fit.residual_rms = std::sqrt(sum_squared_residuals(saturation, rate, points) / m);
  fit.points_used = points.size();
  fit.max_offset = *offsets.rbegin();
  fit.converged = best.converged;
  fit.regime = set.regime;
  if (saturation > 1.0 || rate * fit.max_offset < 0.2) fit.warnings.push_back(FitWarning::LinearRegime);
  if (saturation >= 0.99 * a_max || rate * n1 > 10.0 || rate < 1e-8)
    fit.warnings.push_back(FitWarning::NearBoundary);
  if (!best.converged) fit.warnings.push_back(FitWarning::NotConverged);
  return fit;
}

std::string fit_to_json(const FitResult& fit, int indent) {
  json doc;
  doc["schema_version"] = kFitSchema;
  doc["A"] = fit.params.saturation();
  doc["lambda"] = fit.params.rate();
  doc["base_rate"] = fit.params.base_rate();
  doc["loglik"] = fit.log_likelihood;
  doc["rms"] = fit.residual_rms;
  doc["n_points"] = fit.points_used;
  doc["max_offset"] = fit.max_offset;
  doc["converged"] = fit.converged;
  doc["warnings"] = json::array();
  for (auto w : fit.warnings) doc["warnings"].push_back(to_string(w));
  doc["regime"] = fit.regime;
  doc["group"] = fit.group;
  doc["metric"] = to_string(fit.metric);
  return doc.dump(indent);
}

FitResult fit_from_json(std::string_view text) {
  try {
    json doc = json::parse(text);
    FitResult fit;
    fit.params = SaturationParams(doc.at("A").get<double>(), doc.at("lambda").get<double>());
    fit.log_likelihood = doc.value("loglik", 0.0);
    fit.residual_rms = doc.value("rms", 0.0);
    fit.points_used = doc.value("n_points", std::size_t{0});
    fit.max_offset = doc.value("max_offset", 0.0);
    fit.converged = doc.value("converged", true);
    for (const auto& w : doc.value("warnings", json::array())) {
      const auto s = w.get<std::string>();
      if (s == "LinearRegime") fit.warnings.push_back(FitWarning::LinearRegime);
      else if (s == "NearBoundary") fit.warnings.push_back(FitWarning::NearBoundary);
      else if (s == "NotConverged") fit.warnings.push_back(FitWarning::NotConverged);
      else throw Error(ErrorCode::MalformedInput, "unknown fit warning '" + s + "'");
    }
    fit.regime = doc.value("regime", std::string{});
    fit.group = doc.value("group", std::string{});
    fit.metric = parse_metric(doc.value("metric", std::string("uloc")));
    return fit;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("fit record: ") + e.what());
  }
}

}  // namespace codesurv
