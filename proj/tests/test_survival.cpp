#include <doctest.h>

#include <random>
#include <sstream>

#include "codesurv/error.hpp"
#include "codesurv/kernels.hpp"
#include "codesurv/survival.hpp"
#include "support.hpp"

using namespace codesurv;
using namespace testsupport;

namespace {

const std::vector<ExtensionGroup> kGroups{{"c", {".c"}}};

std::string lines_of(std::initializer_list<const char*> ls) {
  std::string s;
  for (auto l : ls) s += std::string(l) + "\n";
  return s;
}

}  // namespace

TEST_CASE("uloc fraction: identities and set examples") {
  TempDir t;
  const auto s = scan_toys(t.path(),
                           {{{"a.c", lines_of({"a", "b", "c", "d"})}},
                            {{"a.c", lines_of({"a", "b", "x", "y"})}},
                            {{"z.c", lines_of({"a", "y", "z"})}},
                            {{"q.c", lines_of({"p", "q"})}}},
                           kGroups);
  CHECK(uloc_changed_fraction(s[0], s[0], "c") == 0.0);
  CHECK(uloc_changed_fraction(s[0], s[1], "c") == 0.5);
  CHECK(uloc_changed_fraction(s[0], s[2], "c") == 0.75);
  CHECK(uloc_changed_fraction(s[0], s[3], "c") == 1.0);
}

TEST_CASE("file fraction: path ignored, basename and content required") {
  TempDir t;
  const auto moved = scan_toys(t / "m", {{{"src/f.c", "x\n"}}, {{"lib/f.c", "x\n"}}}, kGroups);
  CHECK(file_changed_fraction(moved[0], moved[1], "c") == 0.0);
  const auto renamed = scan_toys(t / "r", {{{"f.c", "x\n"}}, {{"g.c", "x\n"}}}, kGroups);
  CHECK(file_changed_fraction(renamed[0], renamed[1], "c") == 1.0);

  const ToyVersion base{{"a.c", "1\n"}, {"b.c", "2\n"}, {"c.c", "3\n"}, {"d.c", "4\n"}};
  const ToyVersion later{{"a.c", "1\n"}, {"b.c", "2\n"}, {"c.c", "3 edited\n"}};
  const auto four = scan_toys(t / "f", {base, later}, kGroups);
  CHECK(oracle_file_fraction(base, later, ".c") == 0.5);
  CHECK(file_changed_fraction(four[0], four[1], "c") == 0.5);
}

TEST_CASE("file fraction: duplicate basenames resolve permissively") {
  TempDir t;
  const auto s = scan_toys(t.path(), {{{"x/f.c", "a\n"}}, {{"y/f.c", "b\n"}, {"z/f.c", "a\n"}}}, kGroups);
  CHECK(file_changed_fraction(s[0], s[1], "c") == 0.0);
}

TEST_CASE("empty baseline") {
  TempDir t;
  const auto s = scan_toys(t.path(), {{{"a.h", "x\n"}}, {{"a.c", "x\n"}}, {{"a.c", "y\n"}}}, kGroups);
  CHECK_THROWS_AS(uloc_changed_fraction(s[0], s[1], "c"), Error);
  CHECK_THROWS_AS(file_changed_fraction(s[0], s[1], "c"), Error);
  const CurveFamily f = build_curve_family(s, "c", MetricKind::ULOC, Execution::Serial);
  CHECK(f.curves.size() == 1);
  CHECK(f.curves[0].baseline_ordinal == 1);
  REQUIRE(f.warnings.size() == 1);
  CHECK(f.warnings[0].find("EmptyBaseline") != std::string::npos);
}

TEST_CASE("family: shape on 2, 5 and 47 versions") {
  TempDir t;
  std::vector<ToyVersion> vs;
  for (int v = 0; v < 47; ++v) vs.push_back({{"a.c", "keep\nv" + std::to_string(v) + "\n"}});
  const auto s = scan_toys(t.path(), vs, kGroups);

  const std::vector<VersionSnapshot> two(s.begin(), s.begin() + 2);
  const CurveFamily f2 = build_curve_family(two, "c", MetricKind::ULOC);
  REQUIRE(f2.curves.size() == 1);
  CHECK(f2.curves[0].points.size() == 1);

  const std::vector<VersionSnapshot> five(s.begin(), s.begin() + 5);
  std::size_t rows = 0;
  for (const auto& c : build_curve_family(five, "c", MetricKind::FILE).curves) rows += c.points.size();
  CHECK(rows == 10);

  const CurveFamily f = build_curve_family(s, "c", MetricKind::ULOC);
  CHECK(f.curves.size() == 46);
  CHECK(f.curves.front().points.size() == 46);
  CHECK(f.curves.back().points.size() == 1);
  for (const auto& c : f.curves)
    for (const auto& p : c.points) CHECK(p.changed_fraction == 0.5);

  CHECK_THROWS_AS(build_curve_family(std::vector<VersionSnapshot>(s.begin(), s.begin() + 1), "c", MetricKind::ULOC), Error);
  try {
    build_curve_family(s, "js", MetricKind::ULOC);
    FAIL("expected UnknownGroup");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownGroup);
    CHECK(std::string(e.what()).find("c") != std::string::npos);
  }
}

TEST_CASE("family: randomized toy corpora equal the raw-string oracle, serial and parallel") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    TempDir t;
    const std::size_t versions = 2 + rng() % 8;
    std::vector<ToyVersion> vs;
    for (std::size_t v = 0; v < versions; ++v) {
      ToyVersion tv;
      const std::size_t files = 1 + rng() % 6;
      for (std::size_t f = 0; f < files; ++f) {
        std::string body;
        for (std::size_t l = 0, n = 1 + rng() % 30; l < n; ++l) body += "s" + std::to_string(rng() % 25) + "\n";
        tv[(rng() % 2 ? "x/" : "y/") + std::string("f") + std::to_string(rng() % 8) + ".c"] = body;
      }
      vs.push_back(tv);
    }
    const auto snaps = scan_toys(t.path(), vs, kGroups);
    for (MetricKind metric : {MetricKind::ULOC, MetricKind::FILE}) {
      const CurveFamily fs_ = build_curve_family(snaps, "c", metric, Execution::Serial);
      const CurveFamily fp = build_curve_family(snaps, "c", metric, Execution::Parallel);
      CHECK(fs_ == fp);
      for (const auto& c : fs_.curves)
        for (const auto& p : c.points) {
          const auto& a = vs[c.baseline_ordinal];
          const auto& b = vs[c.baseline_ordinal + p.offset];
          const double expect = metric == MetricKind::ULOC ? oracle_uloc_fraction(a, b, ".c")
                                                           : oracle_file_fraction(a, b, ".c");
          CHECK(p.changed_fraction == expect);
        }
    }
  }
}

TEST_CASE("pair index covers the upper triangle") {
  const std::size_t k = 7;
  std::size_t expect = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) CHECK(kernels::pair_index(i, j, k) == expect++);
}

TEST_CASE("curves CSV round trip and validation") {
  const CurveFamily f = family_from(6, [](std::size_t i, std::size_t j) { return 0.1 * (j - i) + 1.0 / 3.0 * i / 7.0; });
  std::stringstream ss;
  write_curves_csv(f, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("group,metric,baseline_ordinal,baseline_label,baseline_size,offset,target_label,changed_fraction\n", 0) == 0);
  std::istringstream in(text);
  const CurveFamily back = read_curves_csv(in);
  CHECK(back.curves == f.curves);
  CHECK(back.version_labels == f.version_labels);

  std::istringstream bad_header("a,b\n");
  CHECK_THROWS_AS(read_curves_csv(bad_header), Error);
  std::string gap = text;
  gap.erase(gap.find("c,uloc,0,v0,1000,2"), gap.find('\n', gap.find("c,uloc,0,v0,1000,2")) - gap.find("c,uloc,0,v0,1000,2") + 1);
  std::istringstream gapped(gap);
  CHECK_THROWS_AS(read_curves_csv(gapped), Error);
}

TEST_CASE("csv helpers") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
  CHECK(csv_split("\"a,b\",c,\"q\"\"\"") == std::vector<std::string>{"a,b", "c", "q\""});
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(parse_metric("file") == MetricKind::FILE);
  CHECK_THROWS_AS(parse_metric("lines"), Error);
}
