#pragma once

#include <cstddef>
#include <vector>

namespace fbflow {

// Default tolerance for tail-function comparisons.  Operations on
// piecewise-constant profiles are exact up to rounding, so this is set well
// above accumulated double rounding but far below any grid scale.
inline constexpr double kDefaultTolF = 1e-10;

// Uniform radial grid: cells [i*cell_width, (i+1)*cell_width) up to
// max_radius, plus the tolerance used when comparing tail functions on it.
struct GridSpec {
  double cell_width = 1.0 / 256.0;
  double max_radius = 4.0;
  double comparison_tolerance = kDefaultTolF;

  std::size_t cell_count() const;
  void validate() const;  // throws ConfigurationError
};

// A finite measure on [0, inf): a point mass at the origin plus an
// L1-and-bounded density that is constant on uniform cells of width
// cell_width.  values[i] is the density on [i*h, (i+1)*h).  The tail
// function F(r) = atom*[r==0] + integral of the density over [r, inf)
// is piecewise linear with breakpoints at the cell boundaries, which is
// what makes order comparisons on a shared grid exact.
struct MassProfile {
  double atom = 0.0;
  double cell_width = 1.0;
  std::vector<double> values;

  double support_end() const { return cell_width * static_cast<double>(values.size()); }
  void validate() const;          // finite, nonnegative, positive cell width
  void trim_trailing_zeros();     // drop exactly-zero cells at the right end
};

// Total mass atom + integral of the density; the density part alone.
// Both use one canonical (right-to-left compensated) summation so that
// results agree bitwise with tail_mass(., 0).
double density_mass(const MassProfile& u);
double total_mass(const MassProfile& u);

// Suffix masses at breakpoints: tails[i] = integral of the density over
// [i*h, inf) for i = 0..n (tails[n] = 0).  Atom not included.
std::vector<double> density_tails(const MassProfile& u);

// F(r; u).  Includes the atom only at r == 0 exactly; linear in r inside
// each cell; 0 beyond the support.
double tail_mass(const MassProfile& u, double r);

// |c_u - c_v| + integral |rho_u - rho_v|.  Exact for shared grids.
double l1_distance(const MassProfile& u, const MassProfile& v);

// sup_r (F(r;u) - F(r;v)) over r = 0 and all grid breakpoints.  Piecewise
// linearity makes breakpoints sufficient, so this is the exact sup.
// Negative when u sits strictly below v.  Used for order checks and for
// quantitative "how badly is the order violated" margins.
double order_gap(const MassProfile& u, const MassProfile& v);

// Mass-transport partial order with headroom m: F(r;u) <= F(r;v) + m for
// all r, tested within tol_f.
bool leq_modulo(const MassProfile& u, const MassProfile& v, double m,
                double tol_f = kDefaultTolF);

// Rightmost point of the support: smallest breakpoint r with F(r) <= tol_f
// (atom ignored; the zero measure has edge 0).
double edge(const MassProfile& u, double tol_f = kDefaultTolF);

// Smallest r with density-tail F(r; rho_u) = m, found by exact linear
// inversion inside the crossing cell.  Requires 0 < m < density_mass(u);
// plateaus resolve to their left end (inf convention).
double quantile_edge(const MassProfile& u, double m);

// Remove exactly mass m from the right end of the density: restrict to
// [0, R_m] with R_m = quantile_edge(u, m).  The boundary cell keeps its
// retained mass spread over the full cell (mass-preserving projection),
// so tails at breakpoints are exact.  m == 0 returns u unchanged.
MassProfile right_cut(const MassProfile& u, double m);

// Remove exactly mass m from the left: the atom first, then density from
// the origin outward; same projection convention in the boundary cell.
// Post: F(r; result) = min(F(r; v), total_mass(v) - m) at breakpoints.
MassProfile left_cut(const MassProfile& v, double m);

// Monotone transport map sending u to v: the largest r' whose cumulative
// v-mass equals the cumulative u-mass at r (atoms included).  Requires
// u <= v in the order above and equal total masses.  Ties (plateaus of the
// v-cumulative) resolve to the rightmost point, capped at v's grid end.
double displacement_map(const MassProfile& u, const MassProfile& v, double r,
                        double tol_f = kDefaultTolF);

// The stationary wedge a - 2*j*r on [0, a/(2j)], sampled at cell midpoints
// (= exact cell averages, so breakpoint tails equal (a-2jr)^2/(4j) exactly).
// a/(2j) must be a whole number of cells.
MassProfile stationary_profile(double a, double j, double cell_width);

}  // namespace fbflow
