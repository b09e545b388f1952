#include "codesurv/model.hpp"

#include <cmath>
#include <string>

#include "codesurv/error.hpp"

namespace codesurv {

SaturationParams::SaturationParams(double saturation, double rate)
    : saturation_(saturation), rate_(rate) {
  if (!(std::isfinite(saturation) && saturation > 0.0))
    throw Error(ErrorCode::InvalidArgument, "saturation level A must be > 0, got " + std::to_string(saturation));
  if (!(std::isfinite(rate) && rate > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rate parameter lambda must be > 0, got " + std::to_string(rate));
}

double cumulative_change(const SaturationParams& params, double n) {
  // expm1 keeps precision for small lambda*n.
  return -params.saturation() * std::expm1(-params.rate() * n);
}

double instantaneous_rate(const SaturationParams& params, double n) {
  return params.base_rate() * std::exp(-params.rate() * n);
}

double base_rate(const SaturationParams& params) { return params.base_rate(); }

}  // namespace codesurv
