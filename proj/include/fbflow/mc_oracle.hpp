#pragma once

#include <cstdint>
#include <vector>

#include "fbflow/edge_path.hpp"
#include "fbflow/mass_profile.hpp"

namespace fbflow {

// Monte Carlo estimates of the quantities the slice solver computes by
// finite volumes: reflected Brownian paths absorbed at the moving edge.
// Everything is deterministic given the seed; paths use counter-based
// streams, so estimates do not depend on evaluation order.
struct McConfig {
  long paths = 10000;
  double dt = 1e-3;           // Euler step
  std::uint64_t seed = 1;
  bool antithetic = false;    // paths in pairs with mirrored increments
  void validate() const;      // paths >= 1, dt > 0
};

struct HitSample {
  bool hit = false;
  double hit_time = 0.0;  // valid when hit (resolution: one Euler step)
  double position = 0.0;  // valid when alive at t_end
};

// Law of one reflected Brownian particle started at r0 at time s: absorbed
// on first crossing of the edge (detected with a Brownian-bridge correction
// inside each step), reflected at the origin, observed at t_end.
// Throws OrderPreconditionError if r0 does not start below the edge.
std::vector<HitSample> sample_hitting(double r0, double s, const EdgePath& edge,
                                      double t_end, const McConfig& cfg);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Mass absorbed at the edge on [0, t] when the initial mass of u diffuses
// and mass is injected at the origin at rate j.  The path budget is split
// between the two sources in proportion to the weight they carry
// (total_mass(u) vs j*t); initial positions are stratified draws from u,
// injection times stratified-uniform on [0, t].  Mass of u sitting at or
// beyond the edge counts as absorbed immediately.  The standard error is
// binomial per source (conservative under stratification) and never reports
// zero uncertainty from a finite sample.
McEstimate mc_mass_loss(const MassProfile& u, const EdgePath& edge, double t,
                        double j, const McConfig& cfg);

// Histogram (on u's grid) of the surviving weight at time t, plus the
// absorbed complement: histogram mass + absorbed = total_mass(u) + j*t up
// to rounding, path by path.
struct McProfileResult {
  MassProfile profile;
  std::vector<double> cell_se;  // standard error of each density value
  double absorbed = 0.0;
  double absorbed_se = 0.0;
};

McProfileResult mc_profile(const MassProfile& u, const EdgePath& edge, double t,
                           double j, const McConfig& cfg);

}  // namespace fbflow
