#pragma once

#include <utility>
#include <vector>

namespace fbflow {

// Piecewise-linear moving edge t -> X_t, stored as (time, position)
// breakpoints with strictly increasing times and positive positions.
// Evaluation clamps to the first/last segment outside the covered range.
struct EdgePath {
  std::vector<std::pair<double, double>> breakpoints;

  double at(double t) const;
  double start_time() const { return breakpoints.front().first; }
  double end_time() const { return breakpoints.back().first; }
  void validate() const;  // throws InvariantViolation
};

// Convenience: the single segment X(t) = X0 + V*(t - t0) over [t0, t1].
EdgePath linear_edge(double t0, double X0, double V, double t1);

}  // namespace fbflow
