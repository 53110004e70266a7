#include "fbflow/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbflow/errors.hpp"

namespace fbflow {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2*pi)
constexpr double kInvSqrt2 = 0.7071067811865475244;    // 1/sqrt(2)

// Mass that may be folded silently into the last target cell.
constexpr double kFoldThreshold = 1e-12;

std::size_t effective_cells(const MassProfile& u) {
  std::size_t n = u.values.size();
  while (n > 0 && u.values[n - 1] == 0.0) --n;
  return n;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_psi(double z) {
  // psi(z) = integral of Phi up to z = z*Phi(z) + phi(z); exactly z (resp. 0)
  // once Phi has saturated in double precision.
  if (z > 40.0) return z;
  if (z < -40.0) return 0.0;
  return z * normal_cdf(z) + kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double kernel_value(double t, double r, double r2) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("kernel_value: t must be positive");
  if (r < 0.0 || r2 < 0.0) throw std::domain_error("kernel_value: points must be nonnegative");
  const double dm = r - r2;
  const double dp = r + r2;
  return (std::exp(-dm * dm / (2.0 * t)) + std::exp(-dp * dp / (2.0 * t))) *
         kInvSqrt2Pi / std::sqrt(t);
}

void HeatStepPlan::validate() const {
  if (!(time > 0.0) || !std::isfinite(time))
    throw ConfigurationError("HeatStepPlan: time must be positive");
  source_grid.validate();
  target_grid.validate();
  const double scale = std::max(source_grid.cell_width, 1.0);
  if (std::abs(source_grid.cell_width - target_grid.cell_width) > 1e-12 * scale)
    throw ConfigurationError("HeatStepPlan: source and target cell widths differ");
  if (target_grid.max_radius + 1e-12 <
      source_grid.max_radius + 6.0 * std::sqrt(time))
    throw ConfigurationError(
        "HeatStepPlan: target grid must reach at least 6*sqrt(t) past the source support");
}

HeatStepPlan plan_heat_step(const MassProfile& u, double t, double max_radius) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("plan_heat_step: t must be positive");
  const double h = u.cell_width;
  const std::size_t n_src = std::max<std::size_t>(effective_cells(u), 1);
  const auto ext = static_cast<std::size_t>(std::ceil(8.0 * std::sqrt(t) / h));
  std::size_t n_tgt = n_src + std::max<std::size_t>(ext, 1);
  if (std::isfinite(max_radius)) {
    const auto cap = static_cast<std::size_t>(std::floor(max_radius / h + 1e-9));
    if (cap < n_src + static_cast<std::size_t>(std::ceil(6.0 * std::sqrt(t) / h)))
      throw ConfigurationError(
          "plan_heat_step: max_radius cannot reach 6*sqrt(t) past the source support");
    n_tgt = std::min(n_tgt, cap);
  }
  HeatStepPlan plan;
  plan.time = t;
  plan.source_grid = {h, static_cast<double>(n_src) * h, kDefaultTolF};
  plan.target_grid = {h, static_cast<double>(n_tgt) * h, kDefaultTolF};
  return plan;
}

MassProfile heat_step(const MassProfile& u, double t, const HeatStepPlan& plan) {
  plan.validate();
  u.validate();
  if (std::abs(plan.time - t) > 1e-12 * std::max(1.0, t))
    throw ConfigurationError("heat_step: plan was built for a different time");

  const double h = u.cell_width;
  const double s = std::sqrt(t);
  const std::size_t n_eff = effective_cells(u);
  const auto n_tgt = static_cast<std::size_t>(
      std::llround(plan.target_grid.max_radius / h));

  // Transition masses are banded: g(n) vanishes (to double precision) once
  // the cells are ~10 standard deviations apart.
  const auto band = std::min<std::size_t>(
      n_eff + n_tgt + 1,
      static_cast<std::size_t>(std::ceil(9.5 * s / h)) + 2);

  // g[n] = s * [psi((n+1)h/s) - 2 psi(nh/s) + psi((n-1)h/s)]: the mass a
  // unit-density source cell sends to a target cell n cells away (direct
  // image); the reflected image of cell i lands in cell k with weight
  // g[k+i+1].  Second differences of the convex psi, hence nonnegative.
  std::vector<double> psi(band + 2);
  for (std::size_t m = 0; m < psi.size(); ++m)
    psi[m] = normal_psi(static_cast<double>(m) * h / s);
  std::vector<double> g(band + 1);
  // psi(-x) = psi(x) - x
  g[0] = s * (2.0 * psi[1] - h / s - 2.0 * psi[0]);
  for (std::size_t m = 1; m <= band; ++m)
    g[m] = s * (psi[m + 1] - 2.0 * psi[m] + psi[m - 1]);

  std::vector<double> mass(n_tgt, 0.0);
  if (u.atom > 0.0) {
    // From the origin the direct and reflected images coincide.
    double phi_lo = normal_cdf(0.0);
    for (std::size_t k = 0; k < std::min(n_tgt, band); ++k) {
      const double phi_hi = normal_cdf(static_cast<double>(k + 1) * h / s);
      mass[k] += u.atom * 2.0 * (phi_hi - phi_lo);
      phi_lo = phi_hi;
    }
  }
  for (std::size_t i = 0; i < n_eff; ++i) {
    const double rho = u.values[i];
    if (rho == 0.0) continue;
    const std::size_t k_lo = i > band ? i - band : 0;
    const std::size_t k_hi = std::min(n_tgt, i + band + 1);
    for (std::size_t k = k_lo; k < k_hi; ++k)
      mass[k] += rho * g[k > i ? k - i : i - k];
    if (i + 1 <= band) {
      const std::size_t k_hi_img = std::min(n_tgt, band - i);
      for (std::size_t k = 0; k < k_hi_img; ++k) mass[k] += rho * g[k + i + 1];
    }
  }

  const double total_in = total_mass(u);
  double total_out = 0.0;
  for (std::size_t k = mass.size(); k-- > 0;) total_out += mass[k];
  const double residual = total_in - total_out;
  if (std::abs(residual) > std::max(kFoldThreshold, kFoldThreshold * total_in))
    throw ConfigurationError(
        "heat_step: mass beyond the target grid exceeds the fold threshold; "
        "enlarge max_radius");
  if (!mass.empty()) mass.back() += residual;

  MassProfile out;
  out.atom = 0.0;
  out.cell_width = h;
  out.values.resize(n_tgt);
  for (std::size_t k = 0; k < n_tgt; ++k) out.values[k] = std::max(0.0, mass[k]) / h;
  out.trim_trailing_zeros();
  return out;
}

MassProfile heat_step(const MassProfile& u, double t, double max_radius) {
  return heat_step(u, t, plan_heat_step(u, t, max_radius));
}

}  // namespace fbflow
