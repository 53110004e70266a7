#pragma once

#include <vector>

#include "fbflow/heat_kernel.hpp"
#include "fbflow/mass_profile.hpp"

namespace fbflow {

// Cut-and-paste at depth delta: slice mass j*delta off the right end of the
// density and park it as a point mass at the origin.  Output atom is
// u.atom + j*delta; output density is u's density restricted to
// [0, quantile_edge(u, j*delta)].  Conserves mass exactly, moves exactly
// 2*j*delta of L1 mass, and never raises any tail value.
MassProfile cut_and_paste(const MassProfile& u, double delta, double j);

// One step of the two bracketing evolutions over a time slice delta:
// the lower one diffuses first and then cuts (so it ends with atom
// j*delta), the upper one cuts first and then diffuses (so it ends with
// atom 0).  The lower step never overtakes the upper in the transport
// order when started from the same state.
MassProfile lower_step(const MassProfile& u, double delta, double j);
MassProfile upper_step(const MassProfile& u, double delta, double j);

struct BarrierStep {
  int k = 0;  // step index; time is k*delta
  MassProfile lower;
  MassProfile upper;
};

// k_steps of both evolutions from a common start.  Scalar diagnostics
// (L1 gap, support edges) are recorded at every step; full profiles every
// record_every steps (and always at the last step).
struct BarrierRun {
  double delta = 0.0;
  double j = 0.0;
  double initial_mass = 0.0;
  std::vector<BarrierStep> steps;     // k = 0, record_every, ..., k_steps
  std::vector<double> gap_l1;         // index k = 0..k_steps
  std::vector<double> edge_lower;     // index k = 0..k_steps
  std::vector<double> edge_upper;
};

struct BarrierRunOptions {
  int record_every = 1;
  double edge_tol = kDefaultTolF;  // threshold used for the edge diagnostics
  double tol_f = kDefaultTolF;     // order-comparison tolerance
  bool check_invariants = true;    // verify ordering / gap law / conservation
};

// Runs both evolutions and (by default) enforces along the way that the
// lower profile stays below the upper, that the L1 gap never exceeds
// 4*j*delta + 5*cell_width, and that mass is conserved to 1e-8 relative.
BarrierRun run_barriers(const MassProfile& u, double delta, double j, int k_steps,
                        const BarrierRunOptions& options = {});

// Common limit of the two evolutions along the dyadic ladder
// delta_l = 2^-l * t, bisected until the sup-distance between the upper
// and lower tail functions falls below the requested tolerance.
struct SeparatingElement {
  double time = 0.0;
  MassProfile profile;        // midpoint of the finest bracket
  double certified_gap = 0.0; // sup_r tail gap of that bracket
  int levels_used = 0;
  MassProfile finest_lower;   // the bracket itself, for downstream checks
  MassProfile finest_upper;
};

struct SeparatingOptions {
  double tol_f = kDefaultTolF;
  bool check_dyadic = true;  // verify the ladder stays nested level to level
};

// Throws ConvergenceFailure (carrying the achieved gap) if max_levels dyadic
// refinements cannot certify the tolerance.
SeparatingElement separating_element(const MassProfile& u, double t, double j,
                                     double tol, int max_levels,
                                     const SeparatingOptions& options = {});

}  // namespace fbflow
