#include "infdecomp/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace infdecomp {
namespace {

struct Vertex {
  std::vector<double> x;
  double f;
};

std::vector<double> affine(const std::vector<double>& a, const std::vector<double>& b, double t) {
  // a + t (b - a)
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + t * (b[i] - a[i]);
  return out;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Vertex> simplex;
  simplex.push_back({x0, eval(x0)});
  for (std::size_t i = 0; i < n; ++i) {
    auto x = x0;
    x[i] += opt.initial_step;
    simplex.push_back({x, eval(x)});
  }

  while (result.evaluations < opt.max_evals) {
    std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    auto row = simplex.front().x;
    row.push_back(simplex.front().f);
    result.trace.push_back(std::move(row));

    const double spread = simplex.back().f - simplex.front().f;
    double diameter = 0.0;
    for (std::size_t v = 1; v < simplex.size(); ++v) {
      for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::fabs(simplex[v].x[i] - simplex[0].x[i]));
    }
    if (spread <= opt.ftol * (1.0 + std::fabs(simplex.front().f)) && diameter <= opt.xtol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
    }
    Vertex& worst = simplex.back();
    const auto xr = affine(centroid, worst.x, -1.0);
    const double fr = eval(xr);
    if (fr < simplex.front().f) {
      const auto xe = affine(centroid, worst.x, -2.0);
      const double fe = eval(xe);
      worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      continue;
    }
    if (fr < simplex[n - 1].f) {
      worst = {xr, fr};
      continue;
    }
    const bool outside = fr < worst.f;
    const auto xc = outside ? affine(centroid, xr, 0.5) : affine(centroid, worst.x, 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : worst.f)) {
      worst = {xc, fc};
      continue;
    }
    for (std::size_t v = 1; v < simplex.size(); ++v) {
      simplex[v].x = affine(simplex[0].x, simplex[v].x, 0.5);
      simplex[v].f = eval(simplex[v].x);
    }
  }
  std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  result.x = simplex.front().x;
  result.fx = simplex.front().f;
  return result;
}

}  // namespace infdecomp
