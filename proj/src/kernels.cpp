#include "codesurv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace codesurv {

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace kernels {
namespace {

bool by_name_content(const FileRecord& a, const FileRecord& b) {
  return std::tie(a.basename, a.content_digest) < std::tie(b.basename, b.content_digest);
}

double pair_fraction(const GroupPayload& base, const GroupPayload& later,
                     const std::vector<FileRecord>& later_sorted, MetricKind metric) {
  if (metric == MetricKind::ULOC) {
    if (base.uloc_count() == 0) return std::numeric_limits<double>::quiet_NaN();
    auto kept = intersection_count(base.uloc(), later.uloc());
    return 1.0 - static_cast<double>(kept) / static_cast<double>(base.uloc_count());
  }
  if (base.file_count() == 0) return std::numeric_limits<double>::quiet_NaN();
  auto kept = unchanged_file_count(base.files(), later_sorted);
  return 1.0 - static_cast<double>(kept) / static_cast<double>(base.file_count());
}

std::vector<std::vector<FileRecord>> sorted_file_lists(
    std::span<const GroupPayload* const> payloads, MetricKind metric) {
  std::vector<std::vector<FileRecord>> out(payloads.size());
  if (metric != MetricKind::FILE) return out;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    out[i] = payloads[i]->files();
    std::sort(out[i].begin(), out[i].end(), by_name_content);
  }
  return out;
}

}  // namespace

FileDigests digest_file(const std::filesystem::path& path) {
  FileDigests out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) return out;
  out.ok = true;
  out.content = digest_bytes(bytes);
  out.lines = normalize_lines(bytes);
  return out;
}

std::vector<FileDigests> digest_files_serial(std::span<const std::filesystem::path> paths) {
  std::vector<FileDigests> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(digest_file(p));
  return out;
}

std::vector<FileDigests> digest_files_omp(std::span<const std::filesystem::path> paths) {
  std::vector<FileDigests> out(paths.size());
  const auto n = static_cast<std::ptrdiff_t>(paths.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = digest_file(paths[i]);
  return out;
}

std::size_t intersection_count(std::span<const Digest> a, std::span<const Digest> b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

std::size_t unchanged_file_count(std::span<const FileRecord> base,
                                 std::span<const FileRecord> later_by_name) {
  std::size_t count = 0;
  for (const auto& f : base) {
    if (std::binary_search(later_by_name.begin(), later_by_name.end(), f, by_name_content)) ++count;
  }
  return count;
}

std::vector<double> pairwise_fractions_serial(std::span<const GroupPayload* const> payloads,
                                              MetricKind metric) {
  const std::size_t k = payloads.size();
  std::vector<double> out(k < 2 ? 0 : k * (k - 1) / 2);
  const auto sorted = sorted_file_lists(payloads, metric);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      out[pair_index(i, j, k)] = pair_fraction(*payloads[i], *payloads[j], sorted[j], metric);
  return out;
}

std::vector<double> pairwise_fractions_omp(std::span<const GroupPayload* const> payloads,
                                           MetricKind metric) {
  const std::size_t k = payloads.size();
  const std::size_t pairs = k < 2 ? 0 : k * (k - 1) / 2;
  std::vector<double> out(pairs);
  const auto sorted = sorted_file_lists(payloads, metric);
  const auto n = static_cast<std::ptrdiff_t>(pairs);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    // Invert the triangular index: row i holds k-1-i pairs.
    std::size_t i = 0;
    std::size_t rem = static_cast<std::size_t>(p);
    while (rem >= k - 1 - i) {
      rem -= k - 1 - i;
      ++i;
    }
    const std::size_t j = i + 1 + rem;
    out[p] = pair_fraction(*payloads[i], *payloads[j], sorted[j], metric);
  }
  return out;
}

}  // namespace kernels
}  // namespace codesurv
