// Serial reference versus OpenMP kernels on a synthetic corpus.
// Usage: bench_kernels [versions] [lines] [files]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <vector>

#include "codesurv/corpus.hpp"
#include "codesurv/execution.hpp"
#include "codesurv/kernels.hpp"
#include "codesurv/synth.hpp"

namespace fs = std::filesystem;
using namespace codesurv;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  SynthSpec spec;
  spec.saturation = 0.6;
  spec.rate = 0.1;
  spec.versions = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 30;
  spec.lines_per_version = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20000;
  spec.files = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 200;
  spec.seed = 7;

  const fs::path dir = fs::temp_directory_path() / "codesurv_bench_kernels";
  fs::remove_all(dir);
  const CorpusManifest manifest = generate(spec, dir);

  std::vector<fs::path> paths;
  for (const auto& v : manifest.versions)
    for (const auto& e : fs::directory_iterator(v.source)) paths.push_back(e.path());

  std::printf("threads: %d\n", parallel_threads());
  std::printf("%-22s %12s %12s %8s\n", "kernel", "serial [s]", "omp [s]", "equal");

  std::vector<kernels::FileDigests> ds, dp;
  const double t_ds = best_of(3, [&] { ds = kernels::digest_files_serial(paths); });
  const double t_dp = best_of(3, [&] { dp = kernels::digest_files_omp(paths); });
  bool same = ds.size() == dp.size();
  for (std::size_t i = 0; same && i < ds.size(); ++i)
    same = ds[i].ok == dp[i].ok && ds[i].content == dp[i].content && ds[i].lines == dp[i].lines;
  std::printf("%-22s %12.4f %12.4f %8s\n", "digest_files", t_ds, t_dp, same ? "yes" : "NO");

  std::vector<VersionSnapshot> snaps;
  for (const auto& v : manifest.versions)
    snaps.push_back(scan_version(v.source, manifest.groups, v.label, v.ordinal, Execution::Parallel));
  std::vector<const GroupPayload*> payloads;
  for (const auto& s : snaps) payloads.push_back(&s.group(spec.group.name));

  for (MetricKind metric : {MetricKind::ULOC, MetricKind::FILE}) {
    std::vector<double> fs_, fp;
    const double t_s = best_of(3, [&] { fs_ = kernels::pairwise_fractions_serial(payloads, metric); });
    const double t_p = best_of(3, [&] { fp = kernels::pairwise_fractions_omp(payloads, metric); });
    const char* name = metric == MetricKind::ULOC ? "pairwise_fractions/uloc" : "pairwise_fractions/file";
    std::printf("%-22s %12.4f %12.4f %8s\n", name, t_s, t_p, fs_ == fp ? "yes" : "NO");
    same = same && fs_ == fp;
  }
  fs::remove_all(dir);
  return same ? 0 : 1;
}
