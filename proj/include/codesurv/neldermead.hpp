#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace codesurv {

struct NelderMeadOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double tolerance = 1e-10;      // stop when max f - min f over the simplex falls below
  double x_tolerance = 1e-8;     // ... and every vertex lies within x_tolerance * max(|x|, 1) of the best
  std::size_t max_iterations = 500;
  std::size_t restarts = 0;      // fresh simplices rebuilt around the incumbent
  double initial_step = 0.05;    // vertex i offsets x_i by initial_step * max(|x_i|, 1)

  void validate() const;  // throws Error(InvalidArgument)
};

struct NelderMeadResult {
  std::vector<double> argmin;
  double value = 0;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

// Downhill simplex minimisation. Deterministic for a given start and options.
// Throws Error(BadStart) when the objective is not finite at `start`.
NelderMeadResult neldermead_minimize(const Objective& objective, std::vector<double> start,
                                     const NelderMeadOptions& options = {});

}  // namespace codesurv
