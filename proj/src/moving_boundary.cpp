#include "fbflow/moving_boundary.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "fbflow/barriers.hpp"
#include "fbflow/errors.hpp"

namespace fbflow {

double EdgePath::at(double t) const {
  if (breakpoints.empty()) throw ConfigurationError("EdgePath::at: empty path");
  if (breakpoints.size() == 1 || t <= breakpoints.front().first)
    return breakpoints.front().second;
  if (t >= breakpoints.back().first) return breakpoints.back().second;
  const auto it = std::upper_bound(
      breakpoints.begin(), breakpoints.end(), t,
      [](double x, const std::pair<double, double>& p) { return x < p.first; });
  const auto& [t1, x1] = *it;
  const auto& [t0, x0] = *(it - 1);
  return x0 + (t - t0) / (t1 - t0) * (x1 - x0);
}

void EdgePath::validate() const {
  if (breakpoints.empty()) throw InvariantViolation("EdgePath: no breakpoints");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    const auto& [t, x] = breakpoints[i];
    if (!std::isfinite(t) || !std::isfinite(x) || x <= 0.0)
      throw InvariantViolation("EdgePath: breakpoints must be finite with X > 0");
    if (i > 0 && t <= breakpoints[i - 1].first)
      throw InvariantViolation("EdgePath: times must be strictly increasing");
  }
}

EdgePath linear_edge(double t0, double X0, double V, double t1) {
  if (!(t1 > t0)) throw ConfigurationError("linear_edge: need t1 > t0");
  EdgePath path;
  path.breakpoints = {{t0, X0}, {t1, X0 + V * (t1 - t0)}};
  path.validate();
  return path;
}

namespace {

int pick_cells(double X0, double cell_width, int requested) {
  if (requested > 0) return std::clamp(requested, 2, 8192);
  const int n = static_cast<int>(std::lround(X0 / cell_width));
  return std::clamp(n, 16, 4096);
}

int pick_steps(double tstar, int requested) {
  if (requested > 0) return requested;
  return std::clamp(static_cast<int>(std::ceil(tstar * 4000.0)), 16, 1000);
}

// Fixed-domain form of one slice: y = r / X(t) maps [0, X_t] to [0, 1], and
// q(y, t) = X(t) * rho(y X(t), t) turns the problem into
//
//   dq/dt = d/dy [ q_y / (2 X^2) + (V y / X) q ]
//
// so cell averages Q_c (with Q_c * dy the mass in the matching r-interval)
// can be advanced by an implicit step assembled face by face.  Summing the
// rows telescopes the interior fluxes, leaving
//
//   M(t + dt) = M(t) + j dt - outflow * dt
//
// to rounding: the recorded mass loss is exact bookkeeping, not quadrature.
// The face fluxes use centred averages, which keeps the linear-in-r profile
// with slope -2j an exact discrete steady state (every face carries flux -j,
// including the one-sided Dirichlet edge), at the price of an M-matrix
// condition |V| X dy <= 1 checked by the caller.
struct SliceIntegrator {
  int N = 0;
  double dy = 0.0;
  double X0 = 0.0;
  double V = 0.0;
  double j = 0.0;
  double t = 0.0;          // slice-local time
  double X = 0.0;          // X0 + V t
  double delta_acc = 0.0;  // accumulated edge outflow
  double drift_sup = 0.0;  // sup over step ends of |delta_acc - j t|
  double mass0 = 0.0;
  std::vector<double> q;
  std::vector<double> sub, diag, sup, rhs;

  void init(const MassProfile& u, double X0_, double V_, double j_, int N_) {
    X0 = X0_;
    V = V_;
    j = j_;
    N = N_;
    dy = 1.0 / static_cast<double>(N);
    t = 0.0;
    X = X0;
    delta_acc = 0.0;
    drift_sup = 0.0;
    q.assign(N, 0.0);
    sub.assign(N, 0.0);
    diag.assign(N, 0.0);
    sup.assign(N, 0.0);
    rhs.assign(N, 0.0);

    const double dm = density_mass(u);
    if (u.atom > 1e-12 * std::max(1.0, dm))
      throw ConfigurationError("solve_slice: initial profile must carry no atom");
    if (u.support_end() > X0 + u.cell_width + 1e-12 * std::max(1.0, X0))
      throw ConfigurationError(
          "solve_slice: density extends more than one cell beyond the edge");

    // Exact per-cell masses: a piecewise-constant density has a piecewise-
    // linear cumulative, so interpolating the breakpoint tails is exact.
    // Mass sitting past X0 (at most one cell of overhang, from re-binning a
    // previous slice) is folded into the edge cell.
    const std::vector<double> tails = density_tails(u);
    const auto n_src = static_cast<double>(tails.size() - 1);
    const auto tail_at = [&](double r) -> double {
      if (r <= 0.0) return tails.front();
      const double s = r / u.cell_width;
      if (s >= n_src) return 0.0;
      const auto i = static_cast<std::size_t>(s);
      return tails[i] + (s - static_cast<double>(i)) * (tails[i + 1] - tails[i]);
    };
    for (int c = 0; c < N; ++c) {
      const double left = tail_at(static_cast<double>(c) * dy * X0);
      const double right = tail_at(static_cast<double>(c + 1) * dy * X0);
      q[c] = (left - right) / dy;
    }
    q[N - 1] += tail_at(X0) / dy;
    mass0 = mass();
  }

  double mass() const {
    return dy * std::accumulate(q.begin(), q.end(), 0.0);
  }

  void step(double dt) {
    const double t_new = t + dt;
    const double X_new = X0 + V * t_new;
    if (X_new <= 0.0)
      throw ConfigurationError("solve_slice: edge reached 0 during the slice");
    const double dD = 1.0 / (2.0 * X_new * X_new * dy);
    const double r = dt / dy;
    const auto A = [&](int i) {
      return V * (static_cast<double>(i) * dy) / X_new;
    };

    diag[0] = 1.0 + r * (dD - 0.5 * A(1));
    sup[0] = -r * (dD + 0.5 * A(1));
    rhs[0] = q[0] + r * j;  // injection flux -j through y = 0
    for (int c = 1; c + 1 < N; ++c) {
      sub[c] = r * (-dD + 0.5 * A(c));
      diag[c] = 1.0 + r * (2.0 * dD - 0.5 * (A(c + 1) - A(c)));
      sup[c] = -r * (dD + 0.5 * A(c + 1));
      rhs[c] = q[c];
    }
    // Edge row: the absorbed flux uses the one-sided gradient to q(1) = 0.
    sub[N - 1] = r * (-dD + 0.5 * A(N - 1));
    diag[N - 1] = 1.0 + r * (3.0 * dD + 0.5 * A(N - 1));
    rhs[N - 1] = q[N - 1];

    for (int c = 1; c < N; ++c) {
      const double w = sub[c] / diag[c - 1];
      diag[c] -= w * sup[c - 1];
      rhs[c] -= w * rhs[c - 1];
    }
    q[N - 1] = rhs[N - 1] / diag[N - 1];
    for (int c = N - 2; c >= 0; --c)
      q[c] = (rhs[c] - sup[c] * q[c + 1]) / diag[c];

    const double outflow = q[N - 1] / (X_new * X_new * dy);  // = 2 dD q_edge
    delta_acc += dt * outflow;
    t = t_new;
    X = X_new;
    drift_sup = std::max(drift_sup, std::abs(delta_acc - j * t));
  }

  // Re-bin the mapped cells (piecewise-constant density q_c / X in r) onto a
  // uniform grid of width h through the cumulative mass, which is exact.
  MassProfile extract(double h) const {
    std::vector<double> prefix(static_cast<std::size_t>(N) + 1, 0.0);
    for (int c = 0; c < N; ++c)
      prefix[c + 1] = prefix[c] + q[c] * dy;
    const auto cum = [&](double r) -> double {
      const double s = r / (dy * X);
      if (s <= 0.0) return 0.0;
      if (s >= static_cast<double>(N)) return prefix[static_cast<std::size_t>(N)];
      const auto i = static_cast<std::size_t>(s);
      return prefix[i] + (s - static_cast<double>(i)) * dy * q[i];
    };
    MassProfile out;
    out.atom = 0.0;
    out.cell_width = h;
    const auto n_out =
        static_cast<std::size_t>(std::max(1.0, std::ceil(X / h - 1e-12)));
    out.values.resize(n_out, 0.0);
    double left = 0.0;
    for (std::size_t k = 0; k < n_out; ++k) {
      const double right = cum(static_cast<double>(k + 1) * h);
      out.values[k] = std::max(0.0, (right - left) / h);
      left = right;
    }
    out.trim_trailing_zeros();
    return out;
  }
};

}  // namespace

SliceResult solve_slice(const MassProfile& u, double X0, double V, double tstar,
                        double j, int nt, const SliceOptions& options) {
  u.validate();
  if (!(X0 > 0.0) || !(tstar > 0.0) || !(j >= 0.0) || nt < 1)
    throw ConfigurationError(
        "solve_slice: need X0 > 0, tstar > 0, j >= 0 and nt >= 1");
  const double X_end = X0 + V * tstar;
  if (X_end <= 0.0)
    throw ConfigurationError("solve_slice: edge reaches 0 within the slice");

  const int N = pick_cells(X0, u.cell_width, options.space_cells);
  const double dy = 1.0 / N;
  if (std::abs(V) * std::max(X0, X_end) * dy > 1.0)
    throw ConfigurationError(
        "solve_slice: velocity too fast for the mesh (|V| X dy must stay <= 1); "
        "use fewer space cells or a shorter slice");

  std::vector<double> records = options.record_times;
  std::sort(records.begin(), records.end());
  const double t_eps = 1e-12 * std::max(1.0, tstar);
  for (double rt : records)
    if (!(rt > 0.0) || rt > tstar + t_eps)
      throw ConfigurationError("solve_slice: record times must lie in (0, tstar]");

  MassProfile start = u;
  start.trim_trailing_zeros();
  SliceIntegrator sim;
  sim.init(start, X0, V, j, N);

  SliceResult res;
  const double dt_base = tstar / nt;
  std::size_t next_rec = 0;
  while (true) {
    while (next_rec < records.size() && records[next_rec] <= sim.t + t_eps) {
      res.snapshots.emplace_back(records[next_rec], sim.extract(u.cell_width));
      ++next_rec;
    }
    if (sim.t >= tstar - t_eps) break;
    double dt = std::min(dt_base, tstar - sim.t);
    if (next_rec < records.size())
      dt = std::min(dt, records[next_rec] - sim.t);  // land on the snapshot
    sim.step(dt);
  }

  res.end_profile = sim.extract(u.cell_width);
  res.mass_lost = sim.delta_acc;
  res.sup_drift = sim.drift_sup;
  res.mass_balance_residual =
      std::abs(sim.mass() - (sim.mass0 + j * tstar - sim.delta_acc));

  const double X_fin = sim.X;
  const double w0 = sim.q[0] / X_fin;
  const double w1 = sim.q[1] / X_fin;
  res.flux0_residual = std::abs((w1 - w0) / (sim.dy * X_fin) + 2.0 * j);
  // Density extrapolated to the edge from the last two cell midpoints.
  const double wm1 = sim.q[N - 1] / X_fin;
  const double wm2 = sim.q[N - 2] / X_fin;
  res.dirichlet_residual = std::abs(wm1 + 0.5 * (wm1 - wm2));
  return res;
}

double find_velocity(const MassProfile& u, double X0, double tstar, double j,
                     double tol, const VelocityOptions& options) {
  u.validate();
  if (!(X0 > 0.0) || !(tstar > 0.0) || !(j > 0.0) || !(tol > 0.0))
    throw ConfigurationError("find_velocity: need X0, tstar, j, tol > 0");

  const int N = pick_cells(X0, u.cell_width, options.space_cells);
  const int nt = pick_steps(tstar, options.nt);
  const double dy = 1.0 / N;
  const double target = j * tstar;
  const double width_tol = options.width_tol > 0.0 ? options.width_tol : 5e-3;

  SliceOptions so;
  so.space_cells = N;
  const auto shed = [&](double V) {
    return solve_slice(u, X0, V, tstar, j, nt, so).mass_lost;
  };

  // Admissible range: the collapse velocity -X0/tstar is the hard lower
  // limit (everything is absorbed there), the mesh condition |V| X dy <= 1
  // caps both ends.  Shed mass falls continuously across the range, so a
  // sign change of shed - target is bracketed on a ladder that is dense
  // near the collapse end, then bisected.
  double v_max = options.v_max;
  if (v_max <= 0.0)
    v_max = 0.98 *
            (-X0 * dy + std::sqrt(X0 * X0 * dy * dy + 4.0 * tstar * dy)) /
            (2.0 * tstar * dy);
  const double v_star = -X0 / tstar;
  const double v_mesh = -0.98 / (X0 * dy);
  const int ladder = std::max(4, options.ladder_points);

  std::vector<std::pair<double, double>> sampled;  // (V, shed) for diagnostics
  double eta = 0.02 * X0 / tstar;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double v_lo = std::max(v_star + eta, v_mesh);
    if (!(v_max > v_lo)) break;
    std::vector<double> vs(ladder), gs(ladder);
    const double span = (v_max - v_star) / (v_lo - v_star);
    for (int i = 0; i < ladder; ++i) {
      const double f = static_cast<double>(i) / (ladder - 1);
      vs[i] = v_star + (v_lo - v_star) * std::pow(span, f);
      gs[i] = shed(vs[i]) - target;
      sampled.emplace_back(vs[i], gs[i] + target);
    }

    double best = std::numeric_limits<double>::quiet_NaN();
    const auto consider = [&](double v) {
      if (std::isnan(best) || std::abs(v) < std::abs(best)) best = v;
    };
    for (int i = 0; i + 1 < ladder; ++i) {
      if (gs[i] == 0.0) {
        consider(vs[i]);
        continue;
      }
      if (gs[i] * gs[i + 1] > 0.0) continue;
      double a = vs[i], b = vs[i + 1], ga = gs[i];
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = shed(mid) - target;
        if (std::abs(gm) <= tol && b - a <= width_tol) {
          consider(mid);
          break;
        }
        if ((gm > 0.0) == (ga > 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
    }
    if (gs.back() == 0.0) consider(vs.back());

    if (!std::isnan(best)) {
      // The running shed mass must track j t along the whole slice, not
      // just at the end.
      SliceResult check = solve_slice(u, X0, best, tstar, j, nt, so);
      if (check.sup_drift > j * tstar * (1.0 + 1e-6)) {
        std::ostringstream msg;
        msg << "find_velocity: running mass at V = " << best
            << " deviates by " << check.sup_drift
            << " inside the slice, above the allowance " << j * tstar;
        throw InvariantViolation(msg.str());
      }
      return best;
    }

    const bool all_below = std::all_of(gs.begin(), gs.end(),
                                       [](double x) { return x < 0.0; });
    if (!all_below || v_lo == v_mesh) break;
    eta *= 0.25;  // everything sheds too little: push towards the collapse end
  }

  std::ostringstream msg;
  msg << "find_velocity: no velocity sheds j*tstar = " << target
      << " (X0 = " << X0 << ", tstar = " << tstar << "); sampled (V, shed):";
  for (const auto& [v, d] : sampled) msg << " (" << v << ", " << d << ")";
  throw SearchFailure(msg.str());
}

QuasiSolution build_quasi_solution(const MassProfile& rho0, double T, double eps,
                                   double j, const QuasiOptions& options) {
  rho0.validate();
  if (!(T > 0.0) || !(eps > 0.0) || !(j > 0.0))
    throw ConfigurationError("build_quasi_solution: need T, eps, j > 0");
  const double M0 = total_mass(rho0);
  if (!(M0 > 0.0))
    throw ConfigurationError("build_quasi_solution: initial profile has no mass");
  if (rho0.atom > 1e-12 * std::max(1.0, M0))
    throw ConfigurationError(
        "build_quasi_solution: initial profile must carry no atom");
  const double X_init = edge(rho0);
  if (!(X_init > 0.0))
    throw ConfigurationError("build_quasi_solution: initial edge must be > 0");

  const double slice_len = eps / j;
  if (T / slice_len > 1e6)
    throw ConfigurationError(
        "build_quasi_solution: epsilon so small the horizon needs over 1e6 slices");
  double vtol = options.velocity_tol;
  if (vtol <= 0.0) vtol = eps * eps / (4.0 * std::max(T * j, eps));

  QuasiSolution qs;
  qs.epsilon = eps;
  qs.j = j;
  qs.horizon = T;
  qs.initial_mass = M0;
  qs.edge.breakpoints.push_back({0.0, X_init});

  MassProfile cur = rho0;
  cur.trim_trailing_zeros();
  qs.snapshots.emplace_back(0.0, cur);

  const double t_tol = 1e-9 * std::max(1.0, T);
  double t_now = 0.0;
  double X_now = X_init;
  double offset = 0.0;  // M(slice start) - M0, signed
  double max_drift = 0.0;
  long snap_count = 0;

  while (t_now < T - t_tol) {
    const double len = std::min(slice_len, T - t_now);

    VelocityOptions vo;
    vo.nt = options.nt_per_slice;
    vo.space_cells = options.space_cells;
    const double V = find_velocity(cur, X_now, len, j, vtol, vo);

    // Snapshot times falling inside this slice, kept with their intended
    // global labels so downstream lookups at multiples of snapshot_dt are
    // exact.
    SliceOptions so;
    so.space_cells = options.space_cells;
    std::vector<double> snap_times;
    if (options.snapshot_dt > 0.0) {
      while (true) {
        const double s = static_cast<double>(snap_count + 1) * options.snapshot_dt;
        if (s > t_now + len + t_tol) break;
        ++snap_count;
        snap_times.push_back(s);
        so.record_times.push_back(std::clamp(s - t_now, t_tol, len));
      }
    }

    const int nt = pick_steps(len, options.nt_per_slice);
    SliceResult sr = solve_slice(cur, X_now, V, len, j, nt, so);

    // Within the slice M(t) - M0 = offset + (j t - shed(t)); across it the
    // end-of-slice imbalance updates the offset.
    max_drift = std::max(max_drift, std::abs(offset) + sr.sup_drift);
    offset -= sr.mass_lost - j * len;
    if (max_drift > eps * (1.0 + 1e-9)) {
      std::ostringstream msg;
      msg << "build_quasi_solution: mass drift " << max_drift
          << " exceeded epsilon = " << eps << " at t = " << t_now + len;
      throw InvariantViolation(msg.str());
    }

    for (std::size_t i = 0; i < sr.snapshots.size(); ++i)
      qs.snapshots.emplace_back(snap_times[i], std::move(sr.snapshots[i].second));

    cur = std::move(sr.end_profile);
    t_now += len;
    X_now += V * len;
    if (!(X_now > 0.0))
      throw ConfigurationError("build_quasi_solution: edge path reached 0");
    qs.edge.breakpoints.emplace_back(t_now, X_now);
    qs.slice_velocities.push_back(V);
  }

  qs.max_drift = max_drift;
  if (qs.snapshots.back().first < T - t_tol) qs.snapshots.emplace_back(T, cur);
  qs.edge.validate();
  return qs;
}

SandwichReport sandwich_check(const QuasiSolution& qs, double delta,
                              double c_margin) {
  if (!(delta > 0.0) || !(c_margin > 0.0))
    throw ConfigurationError("sandwich_check: need delta > 0 and c_margin > 0");
  if (qs.snapshots.empty() || !(qs.epsilon > 0.0))
    throw ConfigurationError("sandwich_check: quasi-solution is empty");
  const double t_tol = 1e-6 * std::max(1.0, qs.horizon);
  const auto& start = qs.snapshots.front();
  if (std::abs(start.first) > t_tol)
    throw ConfigurationError("sandwich_check: first snapshot must sit at t = 0");

  const int K = static_cast<int>(std::floor(qs.horizon / delta + 1e-9));
  std::vector<const MassProfile*> snaps(static_cast<std::size_t>(K) + 1, nullptr);
  snaps[0] = &start.second;
  for (const auto& [t, prof] : qs.snapshots) {
    const int k = static_cast<int>(std::lround(t / delta));
    if (k >= 1 && k <= K && std::abs(t - static_cast<double>(k) * delta) <= t_tol)
      snaps[k] = &prof;
  }
  for (int k = 1; k <= K; ++k)
    if (!snaps[k])
      throw ConfigurationError(
          "sandwich_check: missing snapshot at a multiple of delta (build the "
          "quasi-solution with snapshot_dt = delta)");

  BarrierRunOptions bo;
  bo.record_every = 1;
  const BarrierRun run = run_barriers(start.second, delta, qs.j, K, bo);

  SandwichReport rep;
  rep.all_pass = true;
  for (int k = 1; k <= K; ++k) {
    const BarrierStep& bs = run.steps[static_cast<std::size_t>(k)];
    SandwichReport::Entry e;
    e.k = k;
    e.time = static_cast<double>(k) * delta;
    e.lower_margin = std::max(0.0, order_gap(bs.lower, *snaps[k]));
    e.upper_margin = std::max(0.0, order_gap(*snaps[k], bs.upper));
    e.bound = c_margin * static_cast<double>(k) * qs.epsilon;
    e.pass = e.lower_margin <= e.bound && e.upper_margin <= e.bound;
    rep.max_margin = std::max({rep.max_margin, e.lower_margin, e.upper_margin});
    rep.fitted_c = std::max(rep.fitted_c,
                            std::max(e.lower_margin, e.upper_margin) /
                                (static_cast<double>(k) * qs.epsilon));
    rep.all_pass = rep.all_pass && e.pass;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace fbflow
