#include "fbflow/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fbflow/errors.hpp"
#include "fbflow/rng.hpp"

namespace fbflow {

void McConfig::validate() const {
  if (paths < 1) throw ConfigurationError("McConfig: need at least one path");
  if (!(dt > 0.0)) throw ConfigurationError("McConfig: need dt > 0");
}

namespace {

// Forward-only evaluator of a piecewise-linear edge: path time never moves
// backwards, so the segment cursor only advances.
struct EdgeCursor {
  const std::vector<std::pair<double, double>>* bp;
  std::size_t seg = 0;

  double at(double t) {
    const auto& b = *bp;
    if (b.size() == 1) return b.front().second;
    while (seg + 2 < b.size() && t >= b[seg + 1].first) ++seg;
    const auto& [t0, x0] = b[seg];
    const auto& [t1, x1] = b[seg + 1];
    if (t <= t0) return x0;
    if (t >= t1) return x1;
    return x0 + (t - t0) / (t1 - t0) * (x1 - x0);
  }
};

struct WalkResult {
  bool hit = false;
  double hit_time = 0.0;
  double position = 0.0;
};

// One reflected Euler path from (r0, s) to t_end against the moving edge.
// Crossings inside a step are recovered with the Brownian-bridge formula
// for a linear barrier, P = exp(-2 (L - r)(L' - r') / dt); plain endpoint
// tests systematically miss them.  `sign` mirrors the increments for
// antithetic pairs.
WalkResult walk(double r0, double s, const std::vector<std::pair<double, double>>& bp,
                double t_end, double dt, Xoshiro256pp& rng, double sign) {
  EdgeCursor edge{&bp, 0};
  NormalSampler normal(rng);
  double t = s;
  double r = r0;
  double level = edge.at(t);
  if (r >= level) return {true, s, 0.0};
  const double t_eps = 1e-12 * std::max(1.0, t_end);
  while (t < t_end - t_eps) {
    const double step = std::min(dt, t_end - t);
    double rn = r + std::sqrt(step) * sign * normal.next();
    if (rn < 0.0) rn = -rn;  // reflection at the origin
    const double t_next = t + step;
    const double level_next = edge.at(t_next);
    if (rn >= level_next) return {true, t_next, 0.0};
    const double expo = -2.0 * (level - r) * (level_next - rn) / step;
    if (expo > -40.0 && rng.uniform() < std::exp(expo))
      return {true, t_next, 0.0};
    r = rn;
    t = t_next;
    level = level_next;
  }
  return {false, 0.0, r};
}

// Stream ids: initial-mass paths count from 0, injected paths from 2^62.
constexpr std::uint64_t kInjectedStreamBase = std::uint64_t{1} << 62;

struct GroupTally {
  long n = 0;
  double path_weight = 0.0;
  long hits = 0;
  std::vector<double> survivor_positions;  // filled only when requested
};

// Variance of a binomial proportion that never collapses to zero for a
// finite sample (the true p is only known to ~1/n).
double proportion_variance(long hits, long n) {
  if (n <= 0) return 0.0;
  const double nn = static_cast<double>(n);
  double p = static_cast<double>(hits) / nn;
  p = std::clamp(p, 0.5 / nn, 1.0 - 0.5 / nn);
  return p * (1.0 - p) / nn;
}

// Runs the full two-source simulation behind mc_mass_loss / mc_profile.
void run_sources(const MassProfile& u, const EdgePath& edge, double t, double j,
                 const McConfig& cfg, bool keep_survivors, GroupTally& initial,
                 GroupTally& injected) {
  const double w_u = total_mass(u);
  const double w_inj = j * t;
  const double w_tot = w_u + w_inj;
  if (!(w_tot > 0.0)) return;

  long n_u = std::lround(static_cast<double>(cfg.paths) * (w_u / w_tot));
  if (w_u > 0.0) n_u = std::max<long>(n_u, 1);
  if (w_inj > 0.0) n_u = std::min<long>(n_u, cfg.paths - 1);
  if (w_u == 0.0) n_u = 0;
  if (w_inj == 0.0) n_u = cfg.paths;
  const long n_inj = cfg.paths - n_u;

  initial.n = n_u;
  initial.path_weight = n_u > 0 ? w_u / static_cast<double>(n_u) : 0.0;
  injected.n = n_inj;
  injected.path_weight = n_inj > 0 ? w_inj / static_cast<double>(n_inj) : 0.0;

  // Inverse mass-CDF of u: the atom maps to the origin, density cells are
  // linear in the mass coordinate.
  std::vector<double> prefix(u.values.size() + 1, 0.0);
  for (std::size_t i = 0; i < u.values.size(); ++i)
    prefix[i + 1] = prefix[i] + u.cell_width * u.values[i];
  const double dens = prefix.back();
  const auto position_at = [&](double m) -> double {
    if (m < u.atom || dens <= 0.0) return 0.0;
    const double md = std::min(m - u.atom, dens * (1.0 - 1e-15));
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), md);
    const auto k = static_cast<std::size_t>(it - prefix.begin()) - 1;
    return (static_cast<double>(k) +
            (md - prefix[k]) / (u.cell_width * u.values[k])) *
           u.cell_width;
  };

  const auto run_group = [&](GroupTally& g, std::uint64_t stream_base,
                             bool from_profile) {
    if (g.n == 0) return;
    const long strata = cfg.antithetic ? (g.n + 1) / 2 : g.n;
    for (long i = 0; i < g.n; ++i) {
      const long stratum = cfg.antithetic ? i / 2 : i;
      const double sign = (cfg.antithetic && (i & 1)) ? -1.0 : 1.0;
      Xoshiro256pp rng(cfg.seed,
                       stream_base + static_cast<std::uint64_t>(stratum));
      const double frac =
          (static_cast<double>(stratum) + rng.uniform()) / static_cast<double>(strata);
      double r0 = 0.0;
      double s = 0.0;
      if (from_profile) {
        r0 = position_at(frac * w_u);
      } else {
        s = frac * t;
      }
      const WalkResult w = walk(r0, s, edge.breakpoints, t, cfg.dt, rng, sign);
      if (w.hit)
        ++g.hits;
      else if (keep_survivors)
        g.survivor_positions.push_back(w.position);
    }
  };

  run_group(initial, 0, true);
  run_group(injected, kInjectedStreamBase, false);
}

}  // namespace

std::vector<HitSample> sample_hitting(double r0, double s, const EdgePath& edge,
                                      double t_end, const McConfig& cfg) {
  cfg.validate();
  edge.validate();
  if (!(r0 >= 0.0) || !(t_end > s))
    throw ConfigurationError("sample_hitting: need r0 >= 0 and t_end > s");
  if (r0 >= edge.at(s))
    throw OrderPreconditionError(
        "sample_hitting: start position must lie below the edge");

  std::vector<HitSample> out;
  out.reserve(static_cast<std::size_t>(cfg.paths));
  for (long i = 0; i < cfg.paths; ++i) {
    const std::uint64_t stream =
        cfg.antithetic ? static_cast<std::uint64_t>(i / 2)
                       : static_cast<std::uint64_t>(i);
    const double sign = (cfg.antithetic && (i & 1)) ? -1.0 : 1.0;
    Xoshiro256pp rng(cfg.seed, stream);
    const WalkResult w = walk(r0, s, edge.breakpoints, t_end, cfg.dt, rng, sign);
    out.push_back({w.hit, w.hit ? w.hit_time : 0.0, w.hit ? 0.0 : w.position});
  }
  return out;
}

McEstimate mc_mass_loss(const MassProfile& u, const EdgePath& edge, double t,
                        double j, const McConfig& cfg) {
  cfg.validate();
  edge.validate();
  u.validate();
  if (!(t > 0.0) || !(j >= 0.0))
    throw ConfigurationError("mc_mass_loss: need t > 0 and j >= 0");

  GroupTally initial, injected;
  run_sources(u, edge, t, j, cfg, /*keep_survivors=*/false, initial, injected);

  McEstimate est;
  est.estimate = initial.path_weight * static_cast<double>(initial.hits) +
                 injected.path_weight * static_cast<double>(injected.hits);
  const double var =
      initial.path_weight * initial.path_weight *
          static_cast<double>(initial.n) * static_cast<double>(initial.n) *
          proportion_variance(initial.hits, initial.n) +
      injected.path_weight * injected.path_weight *
          static_cast<double>(injected.n) * static_cast<double>(injected.n) *
          proportion_variance(injected.hits, injected.n);
  est.std_error = std::sqrt(var);
  return est;
}

McProfileResult mc_profile(const MassProfile& u, const EdgePath& edge, double t,
                           double j, const McConfig& cfg) {
  cfg.validate();
  edge.validate();
  u.validate();
  if (!(t > 0.0) || !(j >= 0.0))
    throw ConfigurationError("mc_profile: need t > 0 and j >= 0");

  GroupTally initial, injected;
  run_sources(u, edge, t, j, cfg, /*keep_survivors=*/true, initial, injected);

  const double h = u.cell_width;
  double r_max = 0.0;
  for (double p : initial.survivor_positions) r_max = std::max(r_max, p);
  for (double p : injected.survivor_positions) r_max = std::max(r_max, p);

  McProfileResult res;
  res.profile.atom = 0.0;
  res.profile.cell_width = h;
  const auto n_cells =
      static_cast<std::size_t>(std::floor(r_max / h)) + (r_max > 0.0 ? 1 : 0);
  std::vector<long> count_u(n_cells, 0), count_inj(n_cells, 0);
  const auto bin = [&](const std::vector<double>& positions,
                       std::vector<long>& counts) {
    for (double p : positions) {
      auto k = static_cast<std::size_t>(p / h);
      if (k >= counts.size()) k = counts.size() - 1;
      ++counts[k];
    }
  };
  bin(initial.survivor_positions, count_u);
  bin(injected.survivor_positions, count_inj);

  res.profile.values.resize(n_cells, 0.0);
  res.cell_se.resize(n_cells, 0.0);
  for (std::size_t k = 0; k < n_cells; ++k) {
    const double mass_k = initial.path_weight * static_cast<double>(count_u[k]) +
                          injected.path_weight * static_cast<double>(count_inj[k]);
    res.profile.values[k] = mass_k / h;
    // Binomial cell-occupation variance, per source.
    double var = 0.0;
    if (initial.n > 0) {
      const double p = static_cast<double>(count_u[k]) / static_cast<double>(initial.n);
      var += initial.path_weight * initial.path_weight *
             static_cast<double>(initial.n) * p * (1.0 - p);
    }
    if (injected.n > 0) {
      const double p =
          static_cast<double>(count_inj[k]) / static_cast<double>(injected.n);
      var += injected.path_weight * injected.path_weight *
             static_cast<double>(injected.n) * p * (1.0 - p);
    }
    res.cell_se[k] = std::sqrt(var) / h;
  }

  res.absorbed = initial.path_weight * static_cast<double>(initial.hits) +
                 injected.path_weight * static_cast<double>(injected.hits);
  const double var_abs =
      initial.path_weight * initial.path_weight * static_cast<double>(initial.n) *
          static_cast<double>(initial.n) *
          proportion_variance(initial.hits, initial.n) +
      injected.path_weight * injected.path_weight *
          static_cast<double>(injected.n) * static_cast<double>(injected.n) *
          proportion_variance(injected.hits, injected.n);
  res.absorbed_se = std::sqrt(var_abs);
  return res;
}

}  // namespace fbflow
