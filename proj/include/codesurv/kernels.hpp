#pragma once

// Data-parallel inner loops. Every kernel has a serial reference
// implementation; the OpenMP variant must produce identical results.

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "codesurv/corpus.hpp"

namespace codesurv {

enum class MetricKind { ULOC, FILE };

namespace kernels {

struct FileDigests {
  bool ok = false;
  Digest content;
  std::vector<Digest> lines;
};

FileDigests digest_file(const std::filesystem::path& path);

std::vector<FileDigests> digest_files_serial(std::span<const std::filesystem::path> paths);
std::vector<FileDigests> digest_files_omp(std::span<const std::filesystem::path> paths);

// |a ∩ b| for sorted, duplicate-free ranges.
std::size_t intersection_count(std::span<const Digest> a, std::span<const Digest> b);

// Baseline files for which `later` holds a file with the same basename and
// content digest. `later` must be sorted by (basename, content_digest).
std::size_t unchanged_file_count(std::span<const FileRecord> base,
                                 std::span<const FileRecord> later_by_name);

// Changed fraction for every pair i < j of `payloads`, row-major upper
// triangle: index(i, j) = i*k - i*(i+1)/2 + (j - i - 1). Empty baselines
// yield NaN.
std::vector<double> pairwise_fractions_serial(std::span<const GroupPayload* const> payloads,
                                              MetricKind metric);
std::vector<double> pairwise_fractions_omp(std::span<const GroupPayload* const> payloads,
                                           MetricKind metric);

inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t k) {
  return i * k - i * (i + 1) / 2 + (j - i - 1);
}

}  // namespace kernels
}  // namespace codesurv
