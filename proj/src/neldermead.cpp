#include "codesurv/neldermead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "codesurv/error.hpp"

namespace codesurv {
namespace {

// Non-finite values sort last so the simplex retreats from them.
double sanitize(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

struct Simplex {
  std::vector<std::vector<double>> x;
  std::vector<double> f;

  void order() {
    std::vector<std::size_t> idx(f.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<std::vector<double>> xs;
    std::vector<double> fs;
    for (auto i : idx) {
      xs.push_back(std::move(x[i]));
      fs.push_back(f[i]);
    }
    x = std::move(xs);
    f = std::move(fs);
  }

  double spread() const { return f.back() - f.front(); }

  bool collapsed(double x_tol) const {
    for (std::size_t i = 1; i < x.size(); ++i)
      for (std::size_t k = 0; k < x[0].size(); ++k)
        if (std::abs(x[i][k] - x[0][k]) > x_tol * std::max(std::abs(x[0][k]), 1.0)) return false;
    return true;
  }
};

struct Runner {
  const Objective& objective;
  const NelderMeadOptions& opt;
  std::size_t evaluations = 0;

  double eval(const std::vector<double>& p) {
    ++evaluations;
    return sanitize(objective(p));
  }

  Simplex initial(const std::vector<double>& start, double f0) {
    Simplex s;
    s.x.push_back(start);
    s.f.push_back(f0);
    for (std::size_t i = 0; i < start.size(); ++i) {
      std::vector<double> v = start;
      v[i] += opt.initial_step * std::max(std::abs(v[i]), 1.0);
      s.x.push_back(v);
      s.f.push_back(eval(v));
    }
    s.order();
    return s;
  }

  // Returns true on convergence; `iterations` is incremented per step.
  bool run(Simplex& s, std::size_t& iterations) {
    const std::size_t d = s.x.front().size();
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    auto combine = [&](std::vector<double>& out, double t) {  // centroid + t (centroid - worst)
      for (std::size_t k = 0; k < d; ++k) out[k] = centroid[k] + t * (centroid[k] - s.x.back()[k]);
    };
    while (true) {
      if (std::isfinite(s.spread()) && s.spread() < opt.tolerance && s.collapsed(opt.x_tolerance)) return true;
      if (iterations >= opt.max_iterations) return false;
      ++iterations;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) centroid[k] += s.x[i][k] / static_cast<double>(d);

      combine(xr, opt.reflection);
      const double fr = eval(xr);
      if (fr < s.f.front()) {
        combine(xe, opt.reflection * opt.expansion);
        const double fe = eval(xe);
        if (fe < fr) {
          s.x.back() = xe;
          s.f.back() = fe;
        } else {
          s.x.back() = xr;
          s.f.back() = fr;
        }
      } else if (fr < s.f[d - 1]) {
        s.x.back() = xr;
        s.f.back() = fr;
      } else {
        bool outside = fr < s.f.back();
        combine(xc, outside ? opt.reflection * opt.contraction : -opt.contraction);
        const double fc = eval(xc);
        if (fc < (outside ? fr : s.f.back())) {
          s.x.back() = xc;
          s.f.back() = fc;
        } else {
          for (std::size_t i = 1; i <= d; ++i) {
            for (std::size_t k = 0; k < d; ++k)
              s.x[i][k] = s.x[0][k] + opt.shrink * (s.x[i][k] - s.x[0][k]);
            s.f[i] = eval(s.x[i]);
          }
        }
      }
      s.order();
    }
  }
};

}  // namespace

void NelderMeadOptions::validate() const {
  if (!(reflection > 0 && expansion > 1 && contraction > 0 && contraction < 1 && shrink > 0 &&
        shrink < 1))
    throw Error(ErrorCode::InvalidArgument, "Nelder-Mead coefficients out of range");
  if (!(tolerance > 0 && x_tolerance > 0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be > 0");
  if (!(initial_step > 0)) throw Error(ErrorCode::InvalidArgument, "initial_step must be > 0");
}

NelderMeadResult neldermead_minimize(const Objective& objective, std::vector<double> start,
                                     const NelderMeadOptions& options) {
  options.validate();
  if (start.empty()) throw Error(ErrorCode::InvalidArgument, "empty start vector");
  Runner runner{objective, options};
  const double f0 = objective(start);
  ++runner.evaluations;
  if (!std::isfinite(f0)) throw Error(ErrorCode::BadStart, "objective is not finite at the start point");

  NelderMeadResult result;
  Simplex s = runner.initial(start, f0);
  bool converged = runner.run(s, result.iterations);
  for (std::size_t r = 0; r < options.restarts; ++r) {
    // A collapsed simplex can stall away from the optimum; rebuild and retry.
    const double before = s.f.front();
    Simplex fresh = runner.initial(s.x.front(), s.f.front());
    std::size_t iters = 0;
    bool c = runner.run(fresh, iters);
    result.iterations += iters;
    if (fresh.f.front() <= s.f.front()) {
      s = std::move(fresh);
      converged = c;
    }
    if (converged && before - s.f.front() < options.tolerance) break;
  }
  result.argmin = s.x.front();
  result.value = s.f.front();
  result.converged = converged;
  result.evaluations = runner.evaluations;
  return result;
}

}  // namespace codesurv
