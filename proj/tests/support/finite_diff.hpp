#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace unicor_test {

// Central finite difference of a scalar function with respect to one
// coordinate, f evaluated around the current value of *coord.
template <typename F>
double central_difference(F&& f, double* coord, double eps = 1e-4) {
  const double saved = *coord;
  *coord = saved + eps;
  const double up = f();
  *coord = saved - eps;
  const double down = f();
  *coord = saved;
  return (up - down) / (2.0 * eps);
}

// Worst-coordinate comparison of an analytic gradient against its
// numeric estimate, measured relative to the largest gradient component
// (infinity-norm relative error).
struct GradCompare {
  double max_abs_diff = 0.0;
  double scale = 0.0;

  void add(double analytic, double numeric) {
    max_abs_diff = std::max(max_abs_diff, std::abs(analytic - numeric));
    scale = std::max({scale, std::abs(analytic), std::abs(numeric)});
  }
  double relative_error() const { return max_abs_diff / std::max(scale, 1e-12); }
};

}  // namespace unicor_test
