#pragma once

// Exponential saturation model of code revision:
//   cumulative change   P(n) = A (1 - exp(-lambda n))
//   per-version rate    p(n) = A lambda exp(-lambda n)
//   base rate           R    = A lambda

namespace codesurv {

class SaturationParams {
 public:
  // Throws Error(InvalidArgument) unless A > 0 and lambda > 0 (both finite).
  SaturationParams(double saturation, double rate);

  double saturation() const { return saturation_; }  // A, may exceed 1
  double rate() const { return rate_; }              // lambda, per version
  double base_rate() const { return saturation_ * rate_; }

  bool operator==(const SaturationParams&) const = default;

 private:
  double saturation_;
  double rate_;
};

// Not clamped: values above 1 are possible when A > 1.
double cumulative_change(const SaturationParams& params, double n);
double instantaneous_rate(const SaturationParams& params, double n);
double base_rate(const SaturationParams& params);

}  // namespace codesurv
