#include "fbflow/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbflow/errors.hpp"

namespace fbflow {

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream msg;
    msg << what << " must be positive";
    throw std::domain_error(msg.str());
  }
}

}  // namespace

MassProfile cut_and_paste(const MassProfile& u, double delta, double j) {
  require_positive(delta, "cut_and_paste: delta");
  require_positive(j, "cut_and_paste: j");
  const double quantum = j * delta;
  if (density_mass(u) <= quantum)
    throw InsufficientDensityError(
        "cut_and_paste: free density does not exceed j*delta, measure is not cuttable");
  MassProfile out = right_cut(u, quantum);
  out.atom += quantum;
  return out;
}

MassProfile lower_step(const MassProfile& u, double delta, double j) {
  return cut_and_paste(heat_step(u, delta), delta, j);
}

MassProfile upper_step(const MassProfile& u, double delta, double j) {
  return heat_step(cut_and_paste(u, delta, j), delta);
}

BarrierRun run_barriers(const MassProfile& u, double delta, double j, int k_steps,
                        const BarrierRunOptions& options) {
  require_positive(delta, "run_barriers: delta");
  require_positive(j, "run_barriers: j");
  if (k_steps < 1) throw ConfigurationError("run_barriers: k_steps must be at least 1");
  if (options.record_every < 1)
    throw ConfigurationError("run_barriers: record_every must be at least 1");
  u.validate();

  BarrierRun run;
  run.delta = delta;
  run.j = j;
  run.initial_mass = total_mass(u);

  MassProfile low = u;
  MassProfile up = u;
  run.gap_l1.push_back(0.0);
  run.edge_lower.push_back(edge(low, options.edge_tol));
  run.edge_upper.push_back(edge(up, options.edge_tol));
  run.steps.push_back({0, low, up});

  const double gap_bound = 4.0 * j * delta + 5.0 * u.cell_width;
  const double mass_tol = 1e-8 * std::max(1.0, run.initial_mass);

  for (int k = 1; k <= k_steps; ++k) {
    low = lower_step(low, delta, j);
    up = upper_step(up, delta, j);
    const double gap = l1_distance(low, up);
    run.gap_l1.push_back(gap);
    run.edge_lower.push_back(edge(low, options.edge_tol));
    run.edge_upper.push_back(edge(up, options.edge_tol));

    if (options.check_invariants) {
      std::ostringstream at;
      at << " at step " << k << " (delta=" << delta << ")";
      if (!leq_modulo(low, up, 0.0, options.tol_f))
        throw InvariantViolation("run_barriers: lower overtakes upper" + at.str());
      if (gap > gap_bound + options.tol_f)
        throw InvariantViolation("run_barriers: L1 gap exceeds 4*j*delta + 5h" + at.str());
      if (std::abs(total_mass(low) - run.initial_mass) > mass_tol ||
          std::abs(total_mass(up) - run.initial_mass) > mass_tol)
        throw InvariantViolation("run_barriers: mass drifted" + at.str());
    }
    if (k % options.record_every == 0 || k == k_steps)
      run.steps.push_back({k, low, up});
  }
  return run;
}

SeparatingElement separating_element(const MassProfile& u, double t, double j,
                                     double tol, int max_levels,
                                     const SeparatingOptions& options) {
  require_positive(t, "separating_element: t");
  require_positive(j, "separating_element: j");
  require_positive(tol, "separating_element: tol");
  if (max_levels < 0) throw ConfigurationError("separating_element: max_levels must be >= 0");
  u.validate();

  // Coarsest admissible level: keep j*delta below half the free density so
  // every cut along the run stays well inside the cuttable class.
  const double dm = density_mass(u);
  if (!(dm > 0.0))
    throw InsufficientDensityError("separating_element: u has no density to evolve");
  int level0 = 0;
  while (j * std::ldexp(t, -level0) >= 0.5 * dm) ++level0;
  if (level0 > max_levels)
    throw ConfigurationError(
        "separating_element: max_levels is below the coarsest admissible dyadic level");

  MassProfile prev_low, prev_up;
  bool have_prev = false;
  double achieved = std::numeric_limits<double>::infinity();

  for (int level = level0; level <= max_levels; ++level) {
    const double delta = std::ldexp(t, -level);
    const int k_steps = 1 << level;
    BarrierRunOptions run_opts;
    run_opts.record_every = k_steps;  // only scalars plus the final bracket
    run_opts.tol_f = options.tol_f;
    const BarrierRun run = run_barriers(u, delta, j, k_steps, run_opts);
    const MassProfile& low = run.steps.back().lower;
    const MassProfile& up = run.steps.back().upper;

    if (options.check_dyadic && have_prev) {
      // Refining the ladder must tighten the bracket from both sides.
      if (!leq_modulo(prev_low, low, 0.0, options.tol_f))
        throw InvariantViolation("separating_element: lower envelope not monotone in level");
      if (!leq_modulo(up, prev_up, 0.0, options.tol_f))
        throw InvariantViolation("separating_element: upper envelope not monotone in level");
    }

    achieved = std::max(0.0, order_gap(up, low));
    if (achieved <= tol) {
      SeparatingElement out;
      out.time = t;
      out.certified_gap = achieved;
      out.levels_used = level;
      out.finest_lower = low;
      out.finest_upper = up;
      out.profile.atom = 0.5 * (low.atom + up.atom);
      out.profile.cell_width = low.cell_width;
      out.profile.values.resize(std::max(low.values.size(), up.values.size()), 0.0);
      for (std::size_t i = 0; i < out.profile.values.size(); ++i) {
        const double a = i < low.values.size() ? low.values[i] : 0.0;
        const double b = i < up.values.size() ? up.values[i] : 0.0;
        out.profile.values[i] = 0.5 * (a + b);
      }
      return out;
    }
    prev_low = low;
    prev_up = up;
    have_prev = true;
  }

  std::ostringstream msg;
  msg << "separating_element: gap " << achieved << " above tolerance " << tol
      << " after dyadic level " << max_levels;
  throw ConvergenceFailure(msg.str(), achieved, max_levels);
}

}  // namespace fbflow
