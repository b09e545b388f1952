#pragma once

// Maximum-likelihood fit of the saturation model to pooled change points.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codesurv/model.hpp"
#include "codesurv/neldermead.hpp"
#include "codesurv/screening.hpp"

namespace codesurv {

struct FitConfig {
  double a_max = 3.0;
  NelderMeadOptions simplex{};
  std::size_t restarts = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class FitWarning { LinearRegime, NearBoundary, NotConverged };
const char* to_string(FitWarning w);

struct FitResult {
  SaturationParams params{1.0, 1.0};
  double log_likelihood = 0;
  double residual_rms = 0;
  std::size_t points_used = 0;
  double max_offset = 0;
  bool converged = false;
  std::vector<FitWarning> warnings;  // sorted, unique
  std::string regime;
  std::string group;
  MetricKind metric = MetricKind::ULOC;

  bool has(FitWarning w) const;
};

// Gaussian log-likelihood with the variance profiled out:
//   -(m/2) (ln(2 pi s2) + 1),   s2 = max(mean squared residual, 1e-12).
double log_likelihood(const SaturationParams& params, std::span<const FitPoint> points);
double log_likelihood(const SaturationParams& params, const FitPointSet& points);

// Throws TooFewPoints (fewer than 3 points or a single distinct offset) and
// NoChangeObserved (every P is zero).
FitResult fit_saturation(const FitPointSet& points, const FitConfig& config = {});

// JSON record: schema_version, A, lambda, base_rate, loglik, rms, n_points,
// max_offset, converged, warnings, regime, group, metric.
std::string fit_to_json(const FitResult& fit, int indent = -1);
FitResult fit_from_json(std::string_view text);

}  // namespace codesurv
