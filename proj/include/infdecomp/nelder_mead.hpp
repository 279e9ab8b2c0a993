#pragma once

#include <functional>
#include <vector>

namespace infdecomp {

struct NelderMeadOptions {
  int max_evals = 2000;
  double ftol = 1e-10;  // spread of simplex values, relative to 1 + |f_best|
  double xtol = 1e-7;   // largest vertex distance from the best vertex
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<std::vector<double>> trace;  // best vertex after each iteration: x..., f
};

// Derivative-free minimization with the standard reflection (1), expansion
// (2), contraction (1/2) and shrink (1/2) coefficients.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options = {});

}  // namespace infdecomp
