#pragma once

#include <utility>
#include <vector>

#include "fbflow/edge_path.hpp"
#include "fbflow/mass_profile.hpp"

namespace fbflow {

// One slice of the moving-boundary problem: diffuse u on [0, X_t] with
// X_t = X0 + V*t, injecting flux j at the origin (slope -2j) and absorbing
// at the Dirichlet edge, for a duration tstar.
//
// The solver maps [0, X_t] onto the fixed interval [0,1] and advances cell
// averages of the mapped mass density with an implicit step in flux form.
// Summing the update telescopes the interior fluxes, so the discrete mass
// obeys M(t) = M(0) + j*t - Delta(t) to rounding, with Delta(t) the
// accumulated edge outflow: mass_lost is that Delta at tstar, no
// boundary-flux quadrature involved.
struct SliceResult {
  MassProfile end_profile;
  double mass_lost = 0.0;
  double sup_drift = 0.0;             // sup_{t<=tstar} |Delta(t) - j*t|
  double mass_balance_residual = 0.0; // |M(end) - M(0) - j*tstar + Delta|
  double flux0_residual = 0.0;        // |d rho/dr (0) + 2j| at the final time
  double dirichlet_residual = 0.0;    // |rho| in the cell touching the edge
  std::vector<std::pair<double, MassProfile>> snapshots;  // at requested times
};

struct SliceOptions {
  int space_cells = 0;                // 0: one cell per source grid cell across [0, X0]
  std::vector<double> record_times;   // slice-local times to snapshot (increasing)
};

// Preconditions: u has (numerically) no atom; density beyond X0 must fit in
// one boundary cell (it is folded to the edge; more than that is rejected);
// X stays positive on [0, tstar]; nt >= 1.  The mesh must keep the implicit
// operator an M-matrix (cell Peclet below 2), else ConfigurationError.
SliceResult solve_slice(const MassProfile& u, double X0, double V, double tstar,
                        double j, int nt, const SliceOptions& options = {});

struct VelocityOptions {
  int nt = 0;              // 0: resolve tstar into ~2.5e-4 steps (64..4000)
  int space_cells = 0;
  double v_max = 0.0;      // 0: automatic, capped by the mesh stability bound
  int ladder_points = 24;  // samples used to bracket the root
  double width_tol = 0.0;  // 0: automatic bisection width floor
};

// Edge velocity V such that the slice sheds exactly the injected mass:
// |mass_lost(V) - j*tstar| <= tol.  Delta(V) falls continuously from
// j*tstar + mass near the collapse velocity -X0/tstar to ~0 for fast
// expansion, so a sign change is bracketed on a ladder of samples (dense
// near the collapse end) and bisected; with several brackets the root
// smallest in |V| wins.  Throws SearchFailure (listing the sampled Delta
// values) if no bracket exists in the admissible range.
double find_velocity(const MassProfile& u, double X0, double tstar, double j,
                     double tol, const VelocityOptions& options = {});

// A mass-tracking trajectory: edge path, profile snapshots, and the worst
// deviation of the running mass from its initial value.
struct QuasiSolution {
  double epsilon = 0.0;
  double j = 0.0;
  double horizon = 0.0;   // T
  double initial_mass = 0.0;
  double max_drift = 0.0; // sup_t |M(t) - M(0)| along the discrete trajectory
  EdgePath edge;          // breakpoints at slice boundaries
  std::vector<double> slice_velocities;
  std::vector<std::pair<double, MassProfile>> snapshots;  // includes t = 0
};

struct QuasiOptions {
  double snapshot_dt = 0.0;   // snapshots at multiples of this (0: only t = 0 and t = T)
  double velocity_tol = 0.0;  // 0: eps^2 / (4*max(T*j, eps))
  int nt_per_slice = 0;
  int space_cells = 0;
};

// Splits [0, T] into slices of length eps/j, shoots the edge velocity on
// each so the slice sheds exactly the injected mass, and glues the edge
// path continuously.  Throws InvariantViolation if the observed mass drift
// ever exceeds eps.
QuasiSolution build_quasi_solution(const MassProfile& rho0, double T, double eps,
                                   double j, const QuasiOptions& options = {});

// Compares the quasi-solution snapshots at times k*delta against the two
// bracketing evolutions started from the t = 0 snapshot.  Margins measure
// how far each side of the bracket is violated (0 when the snapshot sits
// inside); the per-step allowance is c_margin * k * eps.  Report-only.
struct SandwichReport {
  struct Entry {
    int k = 0;
    double time = 0.0;
    double lower_margin = 0.0;  // how far the lower evolution overtakes the snapshot
    double upper_margin = 0.0;  // how far the snapshot overtakes the upper evolution
    double bound = 0.0;
    bool pass = false;
  };
  std::vector<Entry> entries;
  double max_margin = 0.0;
  double fitted_c = 0.0;  // smallest c with margins <= c * k * eps for all k
  bool all_pass = false;
};

SandwichReport sandwich_check(const QuasiSolution& qs, double delta, double c_margin);

}  // namespace fbflow
