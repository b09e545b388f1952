#pragma once

// Synthetic version histories whose expected uLOC change curves follow the
// saturation model exactly. Used as ground truth for the whole pipeline.

#include <cstdint>
#include <vector>

#include "codesurv/corpus.hpp"
#include "codesurv/survival.hpp"

namespace codesurv {

struct SynthJump {
  std::size_t version = 0;  // jump lands here
  double fraction = 0;      // extra share of all present lines replaced once
};

struct SynthSpec {
  double saturation = 0.5;  // A in [0, 1]: share of line slots that can change
  double rate = 0.1;        // lambda > 0
  std::size_t versions = 10;
  std::size_t lines_per_version = 1000;
  std::size_t files = 10;
  ExtensionGroup group{"c", {".c"}};
  std::uint64_t seed = 0;
  // Optional extensions for exercising screening.
  std::size_t burn_in_versions = 0;  // transitions into versions 1..k use lambda * factor
  double burn_in_factor = 1.0;
  std::vector<SynthJump> jumps;

  void validate() const;  // throws Error(InvalidArgument)
};

// Per-version replacement probability q with (1 - q)^n = exp(-lambda n).
double derive_mutation_prob(double rate);

// Writes <out>/v000/..., <out>/manifest.json and <out>/expected_curve.csv.
CorpusManifest generate(const SynthSpec& spec, const fs::path& out);

std::vector<CurvePoint> expected_curve(const SynthSpec& spec, std::size_t horizon);

}  // namespace codesurv
