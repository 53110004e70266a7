#include "fbflow/mass_profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fbflow/errors.hpp"

namespace fbflow {

namespace {

bool is_finite(double x) { return std::isfinite(x); }

void require_same_grid(const MassProfile& u, const MassProfile& v, const char* op) {
  const double scale = std::max({u.cell_width, v.cell_width, 1.0});
  if (std::abs(u.cell_width - v.cell_width) > 1e-12 * scale) {
    std::ostringstream msg;
    msg << op << ": cell widths differ (" << u.cell_width << " vs " << v.cell_width << ")";
    throw GridMismatchError(msg.str());
  }
}

}  // namespace

std::size_t GridSpec::cell_count() const {
  return static_cast<std::size_t>(std::llround(max_radius / cell_width));
}

void GridSpec::validate() const {
  if (!is_finite(cell_width) || cell_width <= 0.0)
    throw ConfigurationError("GridSpec: cell_width must be positive and finite");
  if (!is_finite(max_radius) || max_radius < cell_width)
    throw ConfigurationError("GridSpec: max_radius must be at least one cell");
  const double cells = max_radius / cell_width;
  if (std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells))
    throw ConfigurationError("GridSpec: max_radius must be a whole number of cells");
  if (!is_finite(comparison_tolerance) || comparison_tolerance < 0.0)
    throw ConfigurationError("GridSpec: comparison_tolerance must be nonnegative");
}

void MassProfile::validate() const {
  if (!is_finite(atom) || atom < 0.0)
    throw std::invalid_argument("MassProfile: atom must be nonnegative and finite");
  if (!is_finite(cell_width) || cell_width <= 0.0)
    throw std::invalid_argument("MassProfile: cell_width must be positive and finite");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!is_finite(values[i]) || values[i] < 0.0) {
      std::ostringstream msg;
      msg << "MassProfile: density value at cell " << i << " is "
          << values[i] << " (must be nonnegative and finite)";
      throw std::invalid_argument(msg.str());
    }
  }
}

void MassProfile::trim_trailing_zeros() {
  while (!values.empty() && values.back() == 0.0) values.pop_back();
}

// Right-to-left accumulation is the one canonical summation order, so
// density_mass(u) == density_tails(u)[0] bitwise.
std::vector<double> density_tails(const MassProfile& u) {
  const std::size_t n = u.values.size();
  std::vector<double> tails(n + 1, 0.0);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += u.cell_width * u.values[i];
    tails[i] = acc;
  }
  return tails;
}

double density_mass(const MassProfile& u) {
  double acc = 0.0;
  for (std::size_t i = u.values.size(); i-- > 0;) acc += u.cell_width * u.values[i];
  return acc;
}

double total_mass(const MassProfile& u) { return u.atom + density_mass(u); }

double tail_mass(const MassProfile& u, double r) {
  if (!is_finite(r)) throw std::invalid_argument("tail_mass: r must be finite");
  const std::vector<double> tails = density_tails(u);
  if (r <= 0.0) return u.atom + tails[0];
  const double h = u.cell_width;
  const std::size_t n = u.values.size();
  if (r >= u.support_end()) return 0.0;
  const auto i = static_cast<std::size_t>(r / h);
  if (i >= n) return 0.0;  // r/h rounded up against the support end
  return tails[i] - (r - static_cast<double>(i) * h) * u.values[i];
}

double l1_distance(const MassProfile& u, const MassProfile& v) {
  require_same_grid(u, v, "l1_distance");
  const std::size_t n = std::max(u.values.size(), v.values.size());
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double a = i < u.values.size() ? u.values[i] : 0.0;
    const double b = i < v.values.size() ? v.values[i] : 0.0;
    acc += u.cell_width * std::abs(a - b);
  }
  return std::abs(u.atom - v.atom) + acc;
}

double order_gap(const MassProfile& u, const MassProfile& v) {
  require_same_grid(u, v, "order_gap");
  const std::vector<double> tu = density_tails(u);
  const std::vector<double> tv = density_tails(v);
  // r = 0 compares full masses (atoms included); every other breakpoint
  // compares the density tails alone.
  double gap = (u.atom + tu[0]) - (v.atom + tv[0]);
  const std::size_t n = std::max(tu.size(), tv.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < tu.size() ? tu[i] : 0.0;
    const double b = i < tv.size() ? tv[i] : 0.0;
    gap = std::max(gap, a - b);
  }
  return gap;
}

bool leq_modulo(const MassProfile& u, const MassProfile& v, double m, double tol_f) {
  if (!is_finite(m) || m < 0.0)
    throw std::invalid_argument("leq_modulo: headroom m must be nonnegative");
  return order_gap(u, v) <= m + tol_f;
}

double edge(const MassProfile& u, double tol_f) {
  const std::vector<double> tails = density_tails(u);
  for (std::size_t i = 0; i < tails.size(); ++i)
    if (tails[i] <= tol_f) return static_cast<double>(i) * u.cell_width;
  return u.support_end();  // unreachable: tails.back() == 0
}

double quantile_edge(const MassProfile& u, double m) {
  if (!is_finite(m) || m <= 0.0)
    throw std::domain_error("quantile_edge: mass level m must be positive");
  const std::vector<double> tails = density_tails(u);
  if (tails[0] <= m)
    throw InsufficientDensityError(
        "quantile_edge: density mass does not exceed the requested level");
  const double h = u.cell_width;
  // Smallest breakpoint where the tail has dropped to m or below; an exact
  // hit is the left end of any plateau, otherwise invert linearly in the
  // preceding cell.
  std::size_t i = 1;
  while (tails[i] > m) ++i;
  if (tails[i] == m) return static_cast<double>(i) * h;
  const std::size_t k = i - 1;
  const double span = tails[k] - tails[i];  // == h * values[k] > 0
  double r = (static_cast<double>(k) + (tails[k] - m) / span) * h;
  return std::clamp(r, static_cast<double>(k) * h, static_cast<double>(i) * h);
}

MassProfile right_cut(const MassProfile& u, double m) {
  if (!is_finite(m) || m < 0.0)
    throw std::domain_error("right_cut: mass m must be nonnegative");
  if (m == 0.0) return u;
  const std::vector<double> tails = density_tails(u);
  if (tails[0] <= m)
    throw InsufficientDensityError("right_cut: cut would consume the whole density");
  std::size_t i = 1;
  while (tails[i] > m) ++i;
  MassProfile out;
  out.atom = u.atom;
  out.cell_width = u.cell_width;
  if (tails[i] == m) {
    out.values.assign(u.values.begin(), u.values.begin() + static_cast<std::ptrdiff_t>(i));
  } else {
    // Boundary cell keeps tails[k] - m of its mass, spread over the cell.
    const std::size_t k = i - 1;
    out.values.assign(u.values.begin(), u.values.begin() + static_cast<std::ptrdiff_t>(k));
    out.values.push_back((tails[k] - m) / u.cell_width);
  }
  return out;
}

MassProfile left_cut(const MassProfile& v, double m) {
  if (!is_finite(m) || m < 0.0)
    throw std::domain_error("left_cut: mass m must be nonnegative");
  MassProfile out = v;
  if (m <= v.atom) {
    out.atom = v.atom - m;
    return out;
  }
  double rest = m - v.atom;
  out.atom = 0.0;
  const double dm = density_mass(v);
  const double scale = std::max(1.0, total_mass(v));
  if (rest >= dm) {
    if (rest - dm > 1e-12 * scale)
      throw std::domain_error("left_cut: mass m exceeds the total mass");
    out.values.assign(v.values.size(), 0.0);
    return out;
  }
  const double h = v.cell_width;
  std::size_t i = 0;
  double prefix = 0.0;  // density mass strictly left of cell i
  while (i < v.values.size() && prefix + h * v.values[i] <= rest) {
    prefix += h * v.values[i];
    out.values[i] = 0.0;
    ++i;
  }
  if (i == v.values.size()) return out;  // rest == dm up to rounding
  // Cell i straddles the cut: keep its surviving mass spread over the cell.
  out.values[i] = (prefix + h * v.values[i] - rest) / h;
  return out;
}

double displacement_map(const MassProfile& u, const MassProfile& v, double r,
                        double tol_f) {
  require_same_grid(u, v, "displacement_map");
  if (!is_finite(r) || r < 0.0)
    throw std::invalid_argument("displacement_map: r must be nonnegative");
  const double mu = total_mass(u);
  const double mv = total_mass(v);
  if (std::abs(mu - mv) > tol_f)
    throw OrderPreconditionError("displacement_map: masses differ");
  if (!leq_modulo(u, v, 0.0, tol_f))
    throw OrderPreconditionError("displacement_map: u must precede v in the transport order");

  // Cumulative u-mass at r (atom included).
  const std::vector<double> tu = density_tails(u);
  double target;
  if (r >= u.support_end()) {
    target = mu;
  } else {
    const auto i = static_cast<std::size_t>(r / u.cell_width);
    const double tail = i >= u.values.size()
                            ? 0.0
                            : tu[i] - (r - static_cast<double>(i) * u.cell_width) * u.values[i];
    target = u.atom + (tu[0] - tail);
  }

  // Rightmost r' with cumulative v-mass == target, capped at v's grid end.
  const double h = v.cell_width;
  const std::size_t n = v.values.size();
  std::vector<double> cum(n + 1, v.atom);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + h * v.values[i];
  // Plateau ties must be resolved with the comparison tolerance: the
  // cumulative sums carry rounding residue, and an exact comparison would
  // stop at the left end of a flat stretch instead of the rightmost point.
  std::size_t i = n;
  while (i > 0 && cum[i] > target + tol_f) --i;
  if (i == n) return v.support_end();
  if (cum[i] >= target - tol_f) return static_cast<double>(i) * h;
  const double span = cum[i + 1] - cum[i];  // > 0 since cum[i] < target < cum[i+1]
  const double rp = (static_cast<double>(i) + (target - cum[i]) / span) * h;
  return std::clamp(rp, static_cast<double>(i) * h, static_cast<double>(i + 1) * h);
}

MassProfile stationary_profile(double a, double j, double cell_width) {
  if (!is_finite(a) || a <= 0.0) throw std::invalid_argument("stationary_profile: a must be positive");
  if (!is_finite(j) || j <= 0.0) throw std::invalid_argument("stationary_profile: j must be positive");
  if (!is_finite(cell_width) || cell_width <= 0.0)
    throw std::invalid_argument("stationary_profile: cell_width must be positive");
  const double reach = a / (2.0 * j);
  const double cells = reach / cell_width;
  const auto n = static_cast<std::size_t>(std::llround(cells));
  if (n < 1 || std::abs(cells - std::round(cells)) > 1e-9 * std::max(1.0, cells))
    throw ConfigurationError("stationary_profile: a/(2j) must be a whole number of cells");
  MassProfile out;
  out.atom = 0.0;
  out.cell_width = cell_width;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = a - 2.0 * j * (static_cast<double>(i) + 0.5) * cell_width;
  return out;
}

}  // namespace fbflow
