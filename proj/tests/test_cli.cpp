#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "codesurv/cli.hpp"
#include "support.hpp"

using namespace codesurv;
using namespace testsupport;
using json = nlohmann::json;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "codesurv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void write_fit_doc(const fs::path& path, double a, double lambda, const std::string& group, const std::string& metric) {
  json doc{{"schema_version", 1},
           {"group", group},
           {"metric", metric},
           {"fits", json::array({{{"A", a}, {"lambda", lambda}, {"regime", "all"}, {"group", group}, {"metric", metric}}})}};
  write_text(path, doc.dump());
}

}  // namespace

TEST_CASE("cli: help and bad flags") {
  CHECK(cli_run({"--help"}).status == cli::kExitOk);
  CHECK(cli_run({"fit", "--help"}).status == cli::kExitOk);
  CHECK(cli_run({}).status == cli::kExitInput);
  CHECK(cli_run({"scan", "--bogus"}).status == cli::kExitInput);
  CHECK(cli_run({"curves", "--store", "x", "--group", "c", "--metric", "bytes", "--out", "y"}).status == cli::kExitInput);
}

TEST_CASE("cli: synth, scan, curves") {
  TempDir t;
  const Run s = cli_run({"synth", "--A", "0.5", "--lambda", "0.1", "--versions", "3", "--lines", "600", "--files", "6",
                         "--seed", "7", "--out", (t / "corpus").string()});
  REQUIRE(s.status == 0);

  const Run scan = cli_run({"scan", "--manifest", (t / "corpus" / "manifest.json").string(), "--store", (t / "store").string()});
  REQUIRE(scan.status == 0);
  const json index = json::parse(read_text(t / "store" / "index.json"));
  CHECK(index["versions"].size() == 3);
  const std::string counts = read_text(t / "store" / "counts.csv");
  CHECK(counts.find("0,v000,c,600,6,0\n") != std::string::npos);
  CHECK(counts.find("2,v002,c,600,6,0\n") != std::string::npos);
  CHECK(scan.out.find("v001 | c | 600 | 6") != std::string::npos);

  // Re-running over the unchanged corpus reproduces the store bytes.
  const auto before = read_tree(t / "store");
  REQUIRE(cli_run({"scan", "--manifest", (t / "corpus" / "manifest.json").string(), "--store", (t / "store").string(), "--serial"}).status == 0);
  CHECK(read_tree(t / "store") == before);

  const Run curves = cli_run({"curves", "--store", (t / "store").string(), "--group", "c", "--metric", "uloc", "--out",
                              (t / "c.csv").string()});
  REQUIRE(curves.status == 0);
  CHECK(count_lines(read_text(t / "c.csv")) == 1 + 3);

  const Run unknown = cli_run({"curves", "--store", (t / "store").string(), "--group", "js", "--out", (t / "x.csv").string()});
  CHECK(unknown.status == cli::kExitInput);
  CHECK(unknown.err.find("available: c") != std::string::npos);

  CHECK(cli_run({"scan", "--manifest", (t / "nope.json").string(), "--store", (t / "s2").string()}).status == cli::kExitInput);
}

TEST_CASE("cli: 5-version store gives 10 rows equal to the oracle; empty baselines warned") {
  TempDir t;
  std::vector<ToyVersion> vs{{{"a.h", "only header\n"}},
                             {{"a.c", "a\nb\nc\nd\n"}, {"b.c", "x\n"}},
                             {{"a.c", "a\nb\nx\ny\n"}, {"b.c", "x\n"}},
                             {{"moved/a.c", "a\nb\nx\ny\n"}},
                             {{"a.c", "a\ny\nz\n"}, {"c.c", "new\n"}}};
  json manifest{{"software", "toy"}, {"groups", json::array({{{"name", "c"}, {"extensions", {".c"}}}, {{"name", "h"}, {"extensions", {".h"}}}})}};
  manifest["versions"] = json::array();
  for (std::size_t v = 0; v < vs.size(); ++v) {
    write_version(t / ("v" + std::to_string(v)), vs[v]);
    manifest["versions"].push_back({{"label", "v" + std::to_string(v)}, {"path", "v" + std::to_string(v)}});
  }
  write_text(t / "manifest.json", manifest.dump());
  REQUIRE(cli_run({"scan", "--manifest", (t / "manifest.json").string(), "--store", (t / "store").string()}).status == 0);

  for (const char* metric : {"uloc", "file"}) {
    const Run r = cli_run({"curves", "--store", (t / "store").string(), "--group", "c", "--metric", metric, "--out",
                           (t / "c.csv").string()});
    REQUIRE(r.status == 0);
    CHECK(r.err.find("EmptyBaseline") != std::string::npos);
    std::ifstream in(t / "c.csv");
    const CurveFamily f = read_curves_csv(in);
    std::size_t rows = 0;
    for (const auto& c : f.curves)
      for (const auto& p : c.points) {
        ++rows;
        const auto& a = vs[c.baseline_ordinal];
        const auto& b = vs[c.baseline_ordinal + p.offset];
        CHECK(p.changed_fraction == (std::string(metric) == "uloc" ? oracle_uloc_fraction(a, b, ".c")
                                                                   : oracle_file_fraction(a, b, ".c")));
      }
    CHECK(rows == 6);  // 10 pairs less the 4 from the baseline without .c files
  }
  std::size_t h_rows = 0;
  REQUIRE(cli_run({"curves", "--store", (t / "store").string(), "--group", "h", "--out", (t / "h.csv").string()}).status == 0);
  h_rows = count_lines(read_text(t / "h.csv")) - 1;
  CHECK(h_rows == 4);
}

TEST_CASE("cli: fit prints the table row and writes JSON") {
  TempDir t;
  const CurveFamily f = family_from(45, [](std::size_t i, std::size_t j) { return model_p(0.777, 0.0369, double(j - i)); });
  write_curves_csv(f, t / "curves.csv");
  const Run r = cli_run({"fit", "--curves", (t / "curves.csv").string(), "--out", (t / "fit.json").string()});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("0.0369 | 0.777 | 0.0287") != std::string::npos);
  const json doc = json::parse(read_text(t / "fit.json"));
  CHECK(doc["schema_version"] == 1);
  REQUIRE(doc["fits"].size() == 1);
  CHECK(doc["fits"][0]["A"].get<double>() == doctest::Approx(0.777).epsilon(1e-3));
  CHECK(doc["fits"][0]["lambda"].get<double>() == doctest::Approx(0.0369).epsilon(1e-3));
  CHECK(doc["fits"][0]["group"] == "c");

  const CurveFamily lin = family_from(21, [](std::size_t i, std::size_t j) { return 0.0107 * double(j - i); });
  write_curves_csv(lin, t / "lin.csv");
  const Run l = cli_run({"fit", "--curves", (t / "lin.csv").string(), "--out", (t / "lin.json").string()});
  REQUIRE(l.status == 0);
  CHECK(l.out.find("LinearRegime") != std::string::npos);

  write_text(t / "all.json", R"({"cut": 44})");
  const Run none = cli_run({"fit", "--curves", (t / "curves.csv").string(), "--plan", (t / "all.json").string(), "--out",
                            (t / "none.json").string()});
  CHECK(none.status == cli::kExitComputation);
  CHECK(none.err.find("NothingToFit") != std::string::npos);

  const CurveFamily zero = family_from(6, [](std::size_t, std::size_t) { return 0.0; });
  write_curves_csv(zero, t / "zero.csv");
  const Run z = cli_run({"fit", "--curves", (t / "zero.csv").string(), "--out", (t / "z.json").string()});
  CHECK(z.status == cli::kExitComputation);

  write_text(t / "split.json", R"({"splits": ["v20"], "note": "two regimes"})");
  const Run two = cli_run({"fit", "--curves", (t / "curves.csv").string(), "--plan", (t / "split.json").string(), "--out",
                           (t / "two.json").string()});
  REQUIRE(two.status == 0);
  CHECK(json::parse(read_text(t / "two.json"))["fits"].size() == 2);
}

TEST_CASE("cli: screen") {
  TempDir t;
  write_curves_csv(Mechanism(0.777, 0.0369, 47).scale_rate(1, 3, 5).add_jump(20, 0.2).family(), t / "c.csv");
  const Run r = cli_run({"screen", "--curves", (t / "c.csv").string(), "--out", (t / "s.json").string()});
  REQUIRE(r.status == 0);
  const json doc = json::parse(read_text(t / "s.json"));
  CHECK(doc["stabilization_cut"]["ordinal"] == 3);
  CHECK(doc["plan"]["exclude"][0]["ordinal"] == 20);
}

TEST_CASE("cli: bounds") {
  TempDir t;
  write_fit_doc(t / "u.json", 0.777, 0.0369, "cpp", "uloc");
  write_fit_doc(t / "f.json", 0.869, 0.302, "cpp", "file");
  const Run r = cli_run({"bounds", "--fit-uloc", (t / "u.json").string(), "--fit-file", (t / "f.json").string(), "--horizon",
                         "10", "--out", (t / "b").string()});
  REQUIRE(r.status == 0);
  const std::string csv = read_text(t / "b" / "bounds.csv");
  const auto last = csv.substr(csv.rfind("\n10,") + 1);
  const auto cells = csv_split(last.substr(0, last.find('\n')));
  CHECK(std::abs(std::stod(cells[1]) - 0.240) < 5e-4);
  CHECK(std::abs(std::stod(cells[2]) - 0.826) < 1e-3);
  CHECK(json::parse(read_text(t / "b" / "summary.json"))["pairs"].size() == 1);

  const Run zero = cli_run({"bounds", "--fit-uloc", (t / "u.json").string(), "--fit-file", (t / "f.json").string(),
                            "--horizon", "0", "--out", (t / "b0").string()});
  REQUIRE(zero.status == 0);
  CHECK(read_text(t / "b0" / "bounds.csv") == "n,subtle_P,obvious_P\n0,0,0\n");

  CHECK(cli_run({"bounds", "--fit-uloc", (t / "missing.json").string(), "--fit-file", (t / "f.json").string(), "--out",
                 (t / "b1").string()})
            .status == cli::kExitInput);
  write_fit_doc(t / "h.json", 0.784, 0.186, "h", "file");
  const Run mismatch = cli_run({"bounds", "--fit-uloc", (t / "u.json").string(), "--fit-file", (t / "h.json").string(),
                                "--out", (t / "b2").string()});
  CHECK(mismatch.status == cli::kExitInput);
  CHECK(mismatch.err.find("GroupMismatch") != std::string::npos);
}

TEST_CASE("cli: synth smoke, determinism, invariant") {
  TempDir t;
  const std::vector<std::string> flags{"synth", "--A", "0.5", "--lambda", "0.1", "--versions", "20", "--lines", "1000", "--seed", "7"};
  auto with_out = [&](const fs::path& p) {
    auto f = flags;
    f.push_back("--out");
    f.push_back(p.string());
    return f;
  };
  REQUIRE(cli_run(with_out(t / "a")).status == 0);
  REQUIRE(cli_run(with_out(t / "b")).status == 0);
  CHECK(fs::exists(t / "a" / "manifest.json"));
  CHECK(fs::exists(t / "a" / "expected_curve.csv"));
  CHECK(fs::exists(t / "a" / "v019"));
  CHECK(read_tree(t / "a") == read_tree(t / "b"));

  const Run bad = cli_run({"synth", "--A", "2.0", "--lambda", "0.1", "--versions", "5", "--lines", "100", "--out", (t / "c").string()});
  CHECK(bad.status == cli::kExitInput);
  CHECK(bad.err.find("[0, 1]") != std::string::npos);
  CHECK(cli_run({"synth", "--A", "0.5", "--lambda", "0.1", "--versions", "5", "--lines", "100", "--jump", "x", "--out",
                 (t / "d").string()})
            .status == cli::kExitInput);
}

TEST_CASE("cli: pipeline with plans is deterministic") {
  TempDir t;
  REQUIRE(cli_run({"synth", "--A", "0.6", "--lambda", "0.15", "--versions", "12", "--lines", "4000", "--files", "40",
                   "--seed", "3", "--out", (t / "corpus").string()})
              .status == 0);
  write_text(t / "plans" / "c_uloc.json", R"({"cut": "v002", "group": "c", "metric": "uloc"})");
  for (const char* out : {"r1", "r2"})
    REQUIRE(cli_run({"pipeline", "--manifest", (t / "corpus" / "manifest.json").string(), "--out", (t / out).string(),
                     "--plans", (t / "plans").string(), "--horizon", "8"})
                .status == 0);
  auto a = read_tree(t / "r1"), b = read_tree(t / "r2");
  CHECK(a.erase("timings.json") == 1);
  CHECK(b.erase("timings.json") == 1);
  CHECK(a == b);
  const json report = json::parse(a.at("report.json"));
  CHECK(report["groups"][0]["metrics"][0]["plan_file"] == "c_uloc.json");
  CHECK(report["groups"][0]["metrics"][0]["plan"]["cut"]["ordinal"] == 2);
  CHECK(a.count("bounds/c/bounds.csv") == 1);
  CHECK(a.count("fits/c_file.json") == 1);
}
