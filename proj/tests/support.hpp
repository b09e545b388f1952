#pragma once

// Shared fixtures for the test binaries: scratch directories, hand-built
// corpora, model-shaped curve families and raw-string oracles.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "codesurv/corpus.hpp"
#include "codesurv/survival.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("codesurv_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const fs::path& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every regular file below `root`, keyed by its relative path.
inline std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_text(e.path());
  return out;
}

// A toy version: relative path -> file content.
using ToyVersion = std::map<std::string, std::string>;

inline void write_version(const fs::path& dir, const ToyVersion& files) {
  fs::create_directories(dir);
  for (const auto& [rel, body] : files) write_text(dir / rel, body);
}

inline std::vector<codesurv::VersionSnapshot> scan_toys(const fs::path& root,
                                                        const std::vector<ToyVersion>& versions,
                                                        const std::vector<codesurv::ExtensionGroup>& groups,
                                                        codesurv::Execution exec = codesurv::Execution::Serial) {
  std::vector<codesurv::VersionSnapshot> out;
  for (std::size_t v = 0; v < versions.size(); ++v) {
    const fs::path dir = root / ("v" + std::to_string(v));
    write_version(dir, versions[v]);
    out.push_back(codesurv::scan_version(dir, groups, "v" + std::to_string(v), v, exec));
  }
  return out;
}

// ---- raw-string oracles ----------------------------------------------------

inline bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

inline std::string basename_of(const std::string& rel) {
  auto slash = rel.rfind('/');
  return slash == std::string::npos ? rel : rel.substr(slash + 1);
}

// Lines as the oracle understands them, written independently of the library.
inline std::vector<std::string> oracle_lines(const std::string& body) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : body) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  return lines;
}

inline std::set<std::string> oracle_uloc(const ToyVersion& v, const std::string& ext) {
  std::set<std::string> out;
  for (const auto& [rel, body] : v)
    if (has_suffix(rel, ext))
      for (auto& l : oracle_lines(body)) out.insert(l);
  return out;
}

inline double oracle_uloc_fraction(const ToyVersion& a, const ToyVersion& b, const std::string& ext) {
  const auto sa = oracle_uloc(a, ext), sb = oracle_uloc(b, ext);
  std::size_t kept = 0;
  for (const auto& l : sa) kept += sb.count(l);
  return 1.0 - static_cast<double>(kept) / static_cast<double>(sa.size());
}

inline double oracle_file_fraction(const ToyVersion& a, const ToyVersion& b, const std::string& ext) {
  std::size_t total = 0, kept = 0;
  for (const auto& [ra, ba] : a) {
    if (!has_suffix(ra, ext)) continue;
    ++total;
    for (const auto& [rb, bb] : b)
      if (has_suffix(rb, ext) && basename_of(ra) == basename_of(rb) && ba == bb) {
        ++kept;
        break;
      }
  }
  return 1.0 - static_cast<double>(kept) / static_cast<double>(total);
}

// ---- curve families from closed forms ----------------------------------------

// P(baseline, target) for every baseline < target < versions.
inline codesurv::CurveFamily family_from(std::size_t versions,
                                         const std::function<double(std::size_t, std::size_t)>& p,
                                         codesurv::MetricKind metric = codesurv::MetricKind::ULOC,
                                         const std::string& group = "c") {
  codesurv::CurveFamily f;
  f.software = "fixture";
  f.group = group;
  f.metric = metric;
  f.version_count = versions;
  for (std::size_t v = 0; v < versions; ++v) f.version_labels.push_back("v" + std::to_string(v));
  for (std::size_t i = 0; i + 1 < versions; ++i) {
    codesurv::ChangeCurve c;
    c.baseline_ordinal = i;
    c.baseline_label = f.version_labels[i];
    c.metric = metric;
    c.group = group;
    c.baseline_size = 1000;
    for (std::size_t j = i + 1; j < versions; ++j) c.points.push_back({j - i, p(i, j)});
    f.curves.push_back(std::move(c));
  }
  return f;
}

inline double model_p(double a, double lambda, double n) { return -a * std::expm1(-lambda * n); }

// Expected curves of a slot process: a share `a` of lines can change, each
// with probability q[t] on the transition into version t; jump[t] replaces
// that share of every line once.
struct Mechanism {
  double a = 0.5;
  std::vector<double> q;     // size k, q[0] unused
  std::vector<double> jump;  // size k

  Mechanism(double a_, double lambda, std::size_t k) : a(a_), q(k, -std::expm1(-lambda)), jump(k, 0.0) {}

  Mechanism& scale_rate(std::size_t from, std::size_t to, double factor) {  // transitions from..to inclusive
    for (std::size_t t = from; t <= to && t < q.size(); ++t) q[t] = -std::expm1(std::log1p(-q[t]) * factor);
    return *this;
  }
  Mechanism& add_jump(std::size_t t, double fraction) {
    jump[t] = fraction;
    return *this;
  }

  double p(std::size_t i, std::size_t j) const {
    double mutable_alive = 1.0, all_alive = 1.0;
    for (std::size_t t = i + 1; t <= j; ++t) {
      mutable_alive *= 1.0 - q[t];
      all_alive *= 1.0 - jump[t];
    }
    return 1.0 - (a * mutable_alive + (1.0 - a)) * all_alive;
  }

  codesurv::CurveFamily family(codesurv::MetricKind metric = codesurv::MetricKind::ULOC) const {
    return family_from(q.size(), [this](std::size_t i, std::size_t j) { return p(i, j); }, metric);
  }
};

}  // namespace testsupport
