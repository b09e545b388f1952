#include "codesurv/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "codesurv/discoverability.hpp"
#include "codesurv/error.hpp"
#include "codesurv/screening.hpp"
#include "codesurv/survival.hpp"

namespace codesurv::cli {
namespace {

using json = nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::MissingFile, "short write to " + path.string());
}

std::string sig3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

json plan_json(const ScreeningPlan& plan, const CurveFamily& family) {
  return json::parse(plan_to_json(plan, family));
}

struct FitBatch {
  ScreeningPlan plan;
  std::vector<FitResult> fits;
};

FitBatch fit_family(const CurveFamily& family, const std::optional<PlanFile>& plan_file,
                    bool auto_screen, const FitConfig& config) {
  FitBatch batch;
  if (plan_file)
    batch.plan = resolve_plan(*plan_file, family);
  else if (auto_screen)
    batch.plan = heuristic_plan(family);
  for (const auto& set : apply_plan(family, batch.plan)) {
    FitResult fit = fit_saturation(set, config);
    fit.group = family.group;
    fit.metric = family.metric;
    batch.fits.push_back(std::move(fit));
  }
  return batch;
}

json fit_document(const CurveFamily& family, const FitBatch& batch, const FitConfig& config) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["kind"] = "fit";
  doc["group"] = family.group;
  doc["metric"] = to_string(family.metric);
  doc["config"] = {{"A_max", config.a_max},
                   {"restarts", config.restarts},
                   {"seed", config.seed},
                   {"tolerance", config.simplex.tolerance},
                   {"max_iterations", config.simplex.max_iterations}};
  doc["plan"] = plan_json(batch.plan, family);
  doc["fits"] = json::array();
  for (const auto& f : batch.fits) doc["fits"].push_back(json::parse(fit_to_json(f)));
  return doc;
}

void print_fit_table(const std::vector<FitResult>& fits, std::ostream& out) {
  out << "regime | rate parameter (lambda) | saturation level (A) | base rate | warnings\n";
  for (const auto& f : fits) {
    std::string warnings;
    for (auto w : f.warnings) warnings += (warnings.empty() ? "" : ",") + std::string(to_string(w));
    out << f.regime << " | " << sig3(f.params.rate()) << " | " << sig3(f.params.saturation()) << " | "
        << sig3(f.params.base_rate()) << " | " << (warnings.empty() ? "-" : warnings) << '\n';
    if (f.has(FitWarning::LinearRegime))
      out << "  note: linear regime; base rate " << sig3(f.params.base_rate())
          << " is the change per version, A is not a reachable saturation level\n";
  }
}

std::vector<FitResult> load_fit_document(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<FitResult> fits;
  try {
    json doc = json::parse(text);
    if (doc.contains("fits")) {
      for (const auto& f : doc.at("fits")) {
        FitResult fit = fit_from_json(f.dump());
        if (fit.group.empty()) fit.group = doc.value("group", std::string{});
        fits.push_back(std::move(fit));
      }
    } else {
      fits.push_back(fit_from_json(text));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, path.string() + ": " + e.what());
  }
  if (fits.empty()) throw Error(ErrorCode::MalformedInput, path.string() + " holds no fits");
  return fits;
}

std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  return s;
}

json bounds_to_files(const std::vector<FitResult>& subtle, const std::vector<FitResult>& obvious,
                     std::size_t horizon, const fs::path& dir, std::ostream& out) {
  fs::create_directories(dir);
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["kind"] = "bounds";
  doc["group"] = subtle.front().group;
  doc["horizon"] = horizon;
  doc["pairs"] = json::array();
  const bool single = subtle.size() == 1 && obvious.size() == 1;
  for (const auto& s : subtle) {
    for (const auto& o : obvious) {
      DiscoverabilityBounds b = bounds(s, o, horizon);
      const std::string csv_name =
          single ? "bounds.csv" : "bounds_" + safe_name(s.regime) + "__" + safe_name(o.regime) + ".csv";
      std::ostringstream csv;
      write_bounds_csv(b, csv);
      write_file(dir / csv_name, csv.str());

      json pair;
      pair["subtle_regime"] = s.regime;
      pair["obvious_regime"] = o.regime;
      pair["csv"] = csv_name;
      pair["clamped"] = b.clamped;
      pair["ordering_violations"] = b.ordering_violations;
      if (horizon >= 1) {
        pair["subtle_summary"] = json::parse(summary_to_json(persistence_summary(s, horizon)));
        pair["obvious_summary"] = json::parse(summary_to_json(persistence_summary(o, horizon)));
      } else {
        pair["subtle_summary"] = nullptr;
        pair["obvious_summary"] = nullptr;
      }
      doc["pairs"].push_back(std::move(pair));

      out << "group " << b.group << ": subtle [" << s.regime << "] vs obvious [" << o.regime << "]\n";
      out << "n | subtle P | obvious P\n";
      for (const auto& p : b.points)
        out << p.n << " | " << sig3(p.subtle) << " | " << sig3(p.obvious) << '\n';
      if (b.clamped) out << "  warning: model probabilities clamped to [0,1]\n";
      if (!b.ordering_violations.empty())
        out << "  note: subtle exceeds obvious at " << b.ordering_violations.size() << " offsets\n";
    }
  }
  write_file(dir / "summary.json", doc.dump(2) + "\n");
  return doc;
}

std::vector<SynthJump> parse_jumps(const std::vector<std::string>& specs) {
  std::vector<SynthJump> jumps;
  for (const auto& s : specs) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "--jump expects VERSION:FRACTION, got '" + s + "'");
    try {
      jumps.push_back({std::stoull(s.substr(0, colon)), std::stod(s.substr(colon + 1))});
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "--jump expects VERSION:FRACTION, got '" + s + "'");
    }
  }
  return jumps;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_scan(const ScanArgs& args, std::ostream& out, std::ostream& err) {
  const CorpusManifest manifest = load_manifest(args.manifest);
  SnapshotStore store = SnapshotStore::create(args.store, manifest.software, manifest.groups);
  std::ostringstream counts;
  counts << "ordinal,label,group,uloc_count,file_count,unreadable_files\n";
  out << "ordinal | label | group | uLOC | files\n";
  for (const auto& v : manifest.versions) {
    VersionSnapshot snap = scan_version(v.source, manifest.groups, v.label, v.ordinal, args.exec);
    store.put(snap);
    for (const auto& [name, payload] : snap.groups()) {
      out << v.ordinal << " | " << v.label << " | " << name << " | " << payload.uloc_count() << " | "
          << payload.file_count() << '\n';
      counts << v.ordinal << ',' << csv_escape(v.label) << ',' << name << ',' << payload.uloc_count()
             << ',' << payload.file_count() << ',' << payload.unreadable_files() << '\n';
      if (payload.unreadable_files() > 0)
        err << "warning: " << payload.unreadable_files() << " unreadable file(s) skipped in " << v.label
            << " group " << name << '\n';
    }
  }
  write_file(args.store / "counts.csv", counts.str());
  return kExitOk;
}

int cmd_curves(const CurvesArgs& args, std::ostream& out, std::ostream& err) {
  const SnapshotStore store = SnapshotStore::open(args.store);
  const CurveFamily family = build_curve_family(store, args.group, args.metric, args.exec);
  for (const auto& w : family.warnings) err << "warning: " << w << '\n';
  std::ostringstream csv;
  write_curves_csv(family, csv);
  write_file(args.out, csv.str());
  std::size_t rows = 0;
  for (const auto& c : family.curves) rows += c.points.size();
  out << "wrote " << rows << " rows (" << family.curves.size() << " curves) to " << args.out.string() << '\n';
  return kExitOk;
}

int cmd_screen(const ScreenArgs& args, std::ostream& out, std::ostream&) {
  const CurveFamily family = read_curves_csv(args.curves);
  const JumpDetection jumps = detect_jumps(family, args.jumps);
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["kind"] = "screen";
  doc["group"] = family.group;
  doc["metric"] = to_string(family.metric);
  doc["thresholds"] = {{"abs_threshold", args.jumps.abs_threshold},
                       {"rel_factor", args.jumps.rel_factor},
                       {"persist_factor", args.jumps.persist_factor},
                       {"trailing_window", args.trailing_window}};
  doc["jumps"] = json::array();
  for (const auto& ev : jumps.events) {
    doc["jumps"].push_back({{"ordinal", ev.ordinal},
                            {"label", family.version_labels[ev.ordinal]},
                            {"magnitude", ev.magnitude},
                            {"classification", to_string(ev.kind)},
                            {"support", ev.support},
                            {"crossing", ev.crossing}});
    out << "jump at " << family.version_labels[ev.ordinal] << " (ordinal " << ev.ordinal << "): "
        << to_string(ev.kind) << ", magnitude " << sig3(ev.magnitude) << '\n';
  }
  doc["short_curves"] = jumps.short_curves;
  try {
    const std::size_t cut = detect_stabilization(family, args.trailing_window);
    doc["stabilization_cut"] = {{"ordinal", cut}, {"label", family.version_labels[cut]}};
    out << "stabilization cut: " << family.version_labels[cut] << " (ordinal " << cut << ")\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewVersions) throw;
    doc["stabilization_cut"] = nullptr;
    out << "stabilization cut: not determined (" << e.what() << ")\n";
  }
  doc["plan"] = plan_json(heuristic_plan(family, args.jumps, args.trailing_window), family);
  write_file(args.out, doc.dump(2) + "\n");
  return kExitOk;
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream&) {
  const CurveFamily family = read_curves_csv(args.curves);
  std::optional<PlanFile> plan;
  if (args.plan) plan = load_plan(*args.plan);
  const FitBatch batch = fit_family(family, plan, args.auto_screen, args.config);
  write_file(args.out, fit_document(family, batch, args.config).dump(2) + "\n");
  out << family.group << " " << to_string(family.metric) << '\n';
  print_fit_table(batch.fits, out);
  return kExitOk;
}

int cmd_bounds(const BoundsArgs& args, std::ostream& out, std::ostream&) {
  const auto subtle = load_fit_document(args.fit_uloc);
  const auto obvious = load_fit_document(args.fit_file);
  bounds_to_files(subtle, obvious, args.horizon, args.out, out);
  return kExitOk;
}

int cmd_synth(const SynthSpec& spec, const fs::path& out_dir, std::ostream& out, std::ostream&) {
  const CorpusManifest m = generate(spec, out_dir);
  out << "wrote " << m.versions.size() << " versions of " << spec.lines_per_version << " lines in "
      << spec.files << " files to " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_pipeline(const PipelineArgs& args, std::ostream& out, std::ostream& err) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  json timings = json::object();

  const std::string manifest_text = read_file(args.manifest);
  const CorpusManifest manifest = load_manifest(args.manifest);
  fs::create_directories(args.out);

  auto t0 = clock::now();
  const fs::path store_dir = args.out / "store";
  cmd_scan({args.manifest, store_dir, args.exec}, out, err);
  timings["scan"] = seconds(t0, clock::now());
  const SnapshotStore store = SnapshotStore::open(store_dir);

  json report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = kToolVersion;
  report["kind"] = "run_report";
  report["software"] = manifest.software;
  report["manifest_digest"] = digest_bytes(manifest_text).hex();
  report["config"] = {{"horizon", args.horizon},
                      {"auto_screen", args.auto_screen},
                      {"plans_dir", args.plans_dir ? args.plans_dir->filename().string() : ""},
                      {"A_max", args.config.a_max},
                      {"restarts", args.config.restarts},
                      {"seed", args.config.seed}};
  report["store"] = "store";
  report["counts_csv"] = "store/counts.csv";
  report["groups"] = json::array();
  std::size_t fitted = 0;

  for (const auto& group : manifest.groups) {
    json g;
    g["group"] = group.name;
    g["metrics"] = json::array();
    std::vector<FitResult> per_metric[2];
    for (MetricKind metric : {MetricKind::ULOC, MetricKind::FILE}) {
      const std::string stem = group.name + "_" + to_string(metric);
      json m;
      m["metric"] = to_string(metric);
      m["warnings"] = json::array();
      auto t1 = clock::now();
      CurveFamily family = build_curve_family(store, group.name, metric, args.exec);
      timings["curves/" + stem] = seconds(t1, clock::now());
      for (const auto& w : family.warnings) m["warnings"].push_back(w);
      const fs::path csv_rel = fs::path("curves") / (stem + ".csv");
      std::ostringstream csv;
      write_curves_csv(family, csv);
      write_file(args.out / csv_rel, csv.str());
      m["curves_csv"] = csv_rel.generic_string();

      std::optional<PlanFile> plan;
      if (args.plans_dir && fs::exists(*args.plans_dir / (stem + ".json"))) {
        plan = load_plan(*args.plans_dir / (stem + ".json"));
        m["plan_file"] = stem + ".json";
      }
      try {
        auto t2 = clock::now();
        // Re-read through the CSV so the fit sees exactly what was emitted.
        std::istringstream in(csv.str());
        const CurveFamily emitted = read_curves_csv(in);
        FitBatch batch = fit_family(emitted, plan, args.auto_screen, args.config);
        timings["fit/" + stem] = seconds(t2, clock::now());
        const fs::path fit_rel = fs::path("fits") / (stem + ".json");
        write_file(args.out / fit_rel, fit_document(emitted, batch, args.config).dump(2) + "\n");
        m["fit_json"] = fit_rel.generic_string();
        m["plan"] = plan_json(batch.plan, emitted);
        m["fits"] = json::array();
        for (const auto& f : batch.fits) m["fits"].push_back(json::parse(fit_to_json(f)));
        out << group.name << " " << to_string(metric) << '\n';
        print_fit_table(batch.fits, out);
        per_metric[metric == MetricKind::ULOC ? 0 : 1] = std::move(batch.fits);
        ++fitted;
      } catch (const Error& e) {
        if (e.error_class() != ErrorClass::Computation) throw;
        m["warnings"].push_back(e.what());
        err << "warning: " << group.name << " " << to_string(metric) << ": " << e.what() << '\n';
      }
      g["metrics"].push_back(std::move(m));
    }
    if (!per_metric[0].empty() && !per_metric[1].empty()) {
      const fs::path bounds_rel = fs::path("bounds") / group.name;
      bounds_to_files(per_metric[0], per_metric[1], args.horizon, args.out / bounds_rel, out);
      g["bounds_dir"] = bounds_rel.generic_string();
      g["bounds_summary"] = (bounds_rel / "summary.json").generic_string();
    }
    report["groups"].push_back(std::move(g));
  }
  report["timings"] = "timings.json";
  write_file(args.out / "report.json", report.dump(2) + "\n");
  write_file(args.out / "timings.json", timings.dump(2) + "\n");
  if (fitted == 0) throw Error(ErrorCode::NothingToFit, "no group/metric could be fitted");
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"codesurv: code survival across versions and zero-day discoverability bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  ScanArgs scan;
  bool scan_serial = false;
  auto* s_scan = app.add_subcommand("scan", "Digest every version listed in a manifest into a snapshot store");
  s_scan->add_option("--manifest", scan.manifest, "Corpus manifest (JSON)")->required();
  s_scan->add_option("--store", scan.store, "Snapshot store directory")->required();
  s_scan->add_flag("--serial", scan_serial, "Use the serial reference kernels");

  CurvesArgs curves;
  std::string curves_metric = "uloc";
  bool curves_serial = false;
  auto* s_curves = app.add_subcommand("curves", "Emit changed-fraction curves for one group and metric");
  s_curves->add_option("--store", curves.store, "Snapshot store directory")->required();
  s_curves->add_option("--group", curves.group, "Extension group name")->required();
  s_curves->add_option("--metric", curves_metric, "uloc or file")->check(CLI::IsMember({"uloc", "file"}));
  s_curves->add_option("--out", curves.out, "Output CSV")->required();
  s_curves->add_flag("--serial", curves_serial, "Use the serial reference kernels");

  ScreenArgs screen;
  auto* s_screen = app.add_subcommand("screen", "Detect jumps and the stabilization cut in a curves CSV");
  s_screen->add_option("--curves", screen.curves, "Curves CSV")->required();
  s_screen->add_option("--out", screen.out, "Output JSON")->required();
  s_screen->add_option("--abs-threshold", screen.jumps.abs_threshold, "Minimum excess first difference");
  s_screen->add_option("--rel-factor", screen.jumps.rel_factor, "Excess relative to the curve's typical excess");
  s_screen->add_option("--persist-factor", screen.jumps.persist_factor, "Post/pre rate ratio for a regime change");
  s_screen->add_option("--window", screen.trailing_window, "Trailing curves used as the stable reference");

  FitArgs fit;
  std::string fit_plan;
  auto* s_fit = app.add_subcommand("fit", "Fit the saturation model to a curves CSV");
  s_fit->add_option("--curves", fit.curves, "Curves CSV")->required();
  s_fit->add_option("--plan", fit_plan, "Screening plan (JSON)");
  s_fit->add_flag("--auto-screen", fit.auto_screen, "Derive the plan heuristically when --plan is absent");
  s_fit->add_option("--out", fit.out, "Output JSON")->required();
  s_fit->add_option("--seed", fit.config.seed, "Seed for restart jitter");
  s_fit->add_option("--restarts", fit.config.restarts, "Jittered restarts");
  s_fit->add_option("--a-max", fit.config.a_max, "Upper bound on A");

  BoundsArgs bnd;
  auto* s_bounds = app.add_subcommand("bounds", "Discovery-probability bounds from a uLOC fit and a file fit");
  s_bounds->add_option("--fit-uloc", bnd.fit_uloc, "Fit JSON for the uLOC metric")->required();
  s_bounds->add_option("--fit-file", bnd.fit_file, "Fit JSON for the file metric")->required();
  s_bounds->add_option("--horizon", bnd.horizon, "Largest version offset");
  s_bounds->add_option("--out", bnd.out, "Output directory")->required();

  SynthSpec synth;
  fs::path synth_out;
  std::string synth_ext = ".c";
  std::vector<std::string> synth_jumps;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic corpus with known parameters");
  s_synth->add_option("--A,--saturation", synth.saturation, "Mutable fraction in [0,1]")->required();
  s_synth->add_option("--lambda", synth.rate, "Rate parameter")->required();
  s_synth->add_option("--versions", synth.versions, "Number of versions")->required();
  s_synth->add_option("--lines", synth.lines_per_version, "Lines per version")->required();
  s_synth->add_option("--files", synth.files, "Files per version");
  s_synth->add_option("--seed", synth.seed, "Generator seed");
  s_synth->add_option("--group", synth.group.name, "Group name");
  s_synth->add_option("--ext", synth_ext, "File extension including the dot");
  s_synth->add_option("--burn-in", synth.burn_in_versions, "Versions with an elevated rate");
  s_synth->add_option("--burn-in-factor", synth.burn_in_factor, "Rate multiplier during burn-in");
  s_synth->add_option("--jump", synth_jumps, "One-shot replacement VERSION:FRACTION (repeatable)");
  s_synth->add_option("--out", synth_out, "Output directory")->required();

  PipelineArgs pipe;
  std::string pipe_plans;
  bool pipe_serial = false;
  auto* s_pipe = app.add_subcommand("pipeline", "scan, curves, fit and bounds for every group, plus a run report");
  s_pipe->add_option("--manifest", pipe.manifest, "Corpus manifest (JSON)")->required();
  s_pipe->add_option("--out", pipe.out, "Output directory")->required();
  s_pipe->add_option("--plans", pipe_plans, "Directory of <group>_<metric>.json plans");
  s_pipe->add_flag("--auto-screen", pipe.auto_screen, "Heuristic plans where no plan file exists");
  s_pipe->add_option("--horizon", pipe.horizon, "Largest version offset for bounds");
  s_pipe->add_option("--seed", pipe.config.seed, "Seed for restart jitter");
  s_pipe->add_flag("--serial", pipe_serial, "Use the serial reference kernels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*s_scan) {
      scan.exec = scan_serial ? Execution::Serial : Execution::Parallel;
      return cmd_scan(scan, out, err);
    }
    if (*s_curves) {
      curves.metric = parse_metric(curves_metric);
      curves.exec = curves_serial ? Execution::Serial : Execution::Parallel;
      return cmd_curves(curves, out, err);
    }
    if (*s_screen) return cmd_screen(screen, out, err);
    if (*s_fit) {
      if (!fit_plan.empty()) fit.plan = fs::path(fit_plan);
      return cmd_fit(fit, out, err);
    }
    if (*s_bounds) return cmd_bounds(bnd, out, err);
    if (*s_synth) {
      synth.group.extensions = {synth_ext};
      synth.jumps = parse_jumps(synth_jumps);
      return cmd_synth(synth, synth_out, out, err);
    }
    if (*s_pipe) {
      if (!pipe_plans.empty()) pipe.plans_dir = fs::path(pipe_plans);
      pipe.exec = pipe_serial ? Execution::Serial : Execution::Parallel;
      return cmd_pipeline(pipe, out, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.error_class() == ErrorClass::Input ? kExitInput : kExitComputation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInput;
}

}  // namespace codesurv::cli
