#include "codesurv/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "codesurv/error.hpp"
#include "codesurv/model.hpp"

namespace codesurv {
namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t bounded(std::mt19937_64& rng, std::size_t range) {
  return static_cast<std::size_t>((rng() >> 32) * static_cast<std::uint64_t>(range) >> 32);
}

std::string version_name(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "v%03zu", v);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (!(saturation >= 0.0 && saturation <= 1.0))
    throw Error(ErrorCode::InvalidArgument,
                "A must lie in [0, 1]: the generator changes a fraction of line slots, which cannot exceed 1");
  if (!(rate > 0.0 && std::isfinite(rate))) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
  if (versions < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 versions");
  if (lines_per_version == 0 || files == 0)
    throw Error(ErrorCode::InvalidArgument, "line and file counts must be positive");
  if (files > lines_per_version) throw Error(ErrorCode::InvalidArgument, "more files than lines");
  if (!(burn_in_factor > 0)) throw Error(ErrorCode::InvalidArgument, "burn-in factor must be > 0");
  validate_groups({group});
  for (const auto& j : jumps) {
    if (j.version == 0 || j.version >= versions)
      throw Error(ErrorCode::InvalidArgument, "jump version outside 1..versions-1");
    if (!(j.fraction > 0 && j.fraction <= 1))
      throw Error(ErrorCode::InvalidArgument, "jump fraction must lie in (0, 1]");
  }
}

double derive_mutation_prob(double rate) {
  if (!(rate > 0)) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
  return -std::expm1(-rate);
}

std::vector<CurvePoint> expected_curve(const SynthSpec& spec, std::size_t horizon) {
  if (horizon + 1 > spec.versions)
    throw Error(ErrorCode::InvalidArgument, "horizon exceeds versions - 1");
  std::vector<CurvePoint> out;
  for (std::size_t n = 0; n <= horizon; ++n) {
    const double p = spec.saturation == 0.0
                         ? 0.0
                         : cumulative_change(SaturationParams(spec.saturation, spec.rate),
                                             static_cast<double>(n));
    out.push_back({n, p});
  }
  return out;
}

CorpusManifest generate(const SynthSpec& spec, const fs::path& out) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::MissingFile, "cannot create " + out.string());

  std::mt19937_64 rng(spec.seed);
  const std::size_t slots = spec.lines_per_version;
  std::vector<std::uint64_t> token(slots);
  std::iota(token.begin(), token.end(), std::uint64_t{0});
  std::uint64_t next_token = slots;

  // Exactly round(A * L) mutable slots, chosen by a partial Fisher-Yates shuffle.
  const auto mutable_count = static_cast<std::size_t>(std::llround(spec.saturation * static_cast<double>(slots)));
  std::vector<std::size_t> order(slots);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < mutable_count; ++i) std::swap(order[i], order[i + bounded(rng, slots - i)]);
  std::vector<std::size_t> mutable_slots(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(mutable_count));
  std::sort(mutable_slots.begin(), mutable_slots.end());

  CorpusManifest manifest;
  manifest.software = "synthetic";
  manifest.groups = {spec.group};
  const std::string ext = spec.group.extensions.front();

  for (std::size_t v = 0; v < spec.versions; ++v) {
    if (v > 0) {
      const double factor = v <= spec.burn_in_versions ? spec.burn_in_factor : 1.0;
      const double q = derive_mutation_prob(spec.rate * factor);
      // A replacement keeps the slot's mutability, so every baseline sees the
      // same A and q.
      for (auto s : mutable_slots)
        if (uniform01(rng) < q) token[s] = next_token++;
      for (const auto& j : spec.jumps)
        if (j.version == v)
          for (auto& t : token)
            if (uniform01(rng) < j.fraction) t = next_token++;
    }

    const std::string name = version_name(v);
    const fs::path dir = out / name;
    fs::remove_all(dir, ec);
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::MissingFile, "cannot create " + dir.string());
    for (std::size_t f = 0; f < spec.files; ++f) {
      std::string body;
      body.reserve((slots / spec.files + 1) * 20);
      char line[40];
      for (std::size_t s = f; s < slots; s += spec.files) {
        int len = std::snprintf(line, sizeof line, "line_%012llu\n",
                                static_cast<unsigned long long>(token[s]));
        body.append(line, static_cast<std::size_t>(len));
      }
      char fname[32];
      std::snprintf(fname, sizeof fname, "f%05zu", f);
      std::ofstream os(dir / (fname + ext), std::ios::binary | std::ios::trunc);
      os << body;
      if (!os) throw Error(ErrorCode::MissingFile, "short write in " + dir.string());
    }
    manifest.versions.push_back({name, v, dir, std::nullopt});
  }

  write_manifest(manifest, out / "manifest.json");
  std::ofstream csv(out / "expected_curve.csv", std::ios::binary | std::ios::trunc);
  csv << "n,expected_P\n";
  for (const auto& p : expected_curve(spec, spec.versions - 1))
    csv << p.offset << ',' << format_double(p.changed_fraction) << '\n';
  return manifest;
}

}  // namespace codesurv
