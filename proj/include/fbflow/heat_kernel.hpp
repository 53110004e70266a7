#pragma once

#include <limits>

#include "fbflow/mass_profile.hpp"

namespace fbflow {

// Standard-normal cdf and its antiderivative psi(z) = z*Phi(z) + phi(z).
// psi is what turns cell-to-cell transition masses of the reflecting heat
// kernel into closed form, so both are exposed for the tests.
double normal_cdf(double z);
double normal_psi(double z);

// Reflecting (zero-flux at the origin) heat kernel on the half line at
// time t, by the method of images:
//   [exp(-(r-r2)^2/(2t)) + exp(-(r+r2)^2/(2t))] / sqrt(2*pi*t)
double kernel_value(double t, double r, double r2);

// Geometry of one diffusion step: the target grid keeps the source cell
// width and must reach far enough past the source support that the
// truncated tail is negligible (at least 6*sqrt(t) beyond it; the planner
// extends by 8*sqrt(t) so the spill-over sits below 1e-12 of the mass).
struct HeatStepPlan {
  double time = 0.0;
  GridSpec source_grid;
  GridSpec target_grid;
  void validate() const;  // throws ConfigurationError
};

// Build the plan for diffusing u for time t.  max_radius caps the target
// grid; if the cap bites, heat_step will reject the leftover mass.
HeatStepPlan plan_heat_step(const MassProfile& u, double t,
                            double max_radius = std::numeric_limits<double>::infinity());

// Diffuse u for time t with the reflecting kernel.  The atom melts into
// density (output atom is 0); each source cell contributes exact analytic
// transition masses (differences of psi), so mass is conserved to rounding
// and no quadrature enters.  Mass that would land beyond the target grid
// is folded into the last cell when below 1e-12, otherwise the plan is
// rejected as a configuration error.
MassProfile heat_step(const MassProfile& u, double t, const HeatStepPlan& plan);
MassProfile heat_step(const MassProfile& u, double t,
                      double max_radius = std::numeric_limits<double>::infinity());

}  // namespace fbflow
