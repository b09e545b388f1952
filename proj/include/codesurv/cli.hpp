#pragma once

// Subcommand implementations behind the `codesurv` executable. Each command
// reads and writes on-disk intermediates so every stage can be inspected.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "codesurv/corpus.hpp"
#include "codesurv/fitting.hpp"
#include "codesurv/synth.hpp"

namespace codesurv::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;        // bad flags, missing or malformed files
inline constexpr int kExitComputation = 3;  // data cannot support the result

struct ScanArgs {
  fs::path manifest;
  fs::path store;
  Execution exec = Execution::Parallel;
};

struct CurvesArgs {
  fs::path store;
  std::string group;
  MetricKind metric = MetricKind::ULOC;
  fs::path out;
  Execution exec = Execution::Parallel;
};

struct ScreenArgs {
  fs::path curves;
  fs::path out;
  JumpDetectionOptions jumps{};
  std::size_t trailing_window = 5;
};

struct FitArgs {
  fs::path curves;
  std::optional<fs::path> plan;
  bool auto_screen = false;
  fs::path out;
  FitConfig config{};
};

struct BoundsArgs {
  fs::path fit_uloc;
  fs::path fit_file;
  std::size_t horizon = 10;
  fs::path out;  // directory
};

struct PipelineArgs {
  fs::path manifest;
  fs::path out;  // directory
  std::optional<fs::path> plans_dir;
  bool auto_screen = false;
  std::size_t horizon = 10;
  FitConfig config{};
  Execution exec = Execution::Parallel;
};

// Each command returns kExitOk or throws codesurv::Error.
int cmd_scan(const ScanArgs& args, std::ostream& out, std::ostream& err);
int cmd_curves(const CurvesArgs& args, std::ostream& out, std::ostream& err);
int cmd_screen(const ScreenArgs& args, std::ostream& out, std::ostream& err);
int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);
int cmd_bounds(const BoundsArgs& args, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthSpec& spec, const fs::path& out_dir, std::ostream& out, std::ostream& err);
int cmd_pipeline(const PipelineArgs& args, std::ostream& out, std::ostream& err);

// Parses argv, dispatches, and maps exceptions onto exit statuses.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace codesurv::cli
