// Batch driver for the free-boundary flow library: builds barrier runs,
// separating elements, quasi-solutions and validation reports from presets
// or profile files, and writes plot-ready CSV/JSON artifacts.
//
// Exit codes: 0 success, 1 invariant violation or failed check,
// 2 I/O error, 64 usage.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fbflow/barriers.hpp"
#include "fbflow/errors.hpp"
#include "fbflow/mass_profile.hpp"
#include "fbflow/mc_oracle.hpp"
#include "fbflow/moving_boundary.hpp"
#include "fbflow/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  double j = 1.0;
  double grid_h = 1.0 / 256.0;
  double rmax = 0.0;          // 0: derived from the profile
  double delta = 0.05;
  std::string levels;         // "8" or "3..8"
  double t = 1.0;
  double horizon = 1.0;       // --T
  std::string eps = "0.05";   // single value or comma list (validate)
  double tol = 1e-3;
  std::uint64_t seed = 1;
  long paths = 20000;
  double mc_dt = 1e-3;
  std::string preset = "stationary";
  double a = 2.0;             // stationary preset height
  int k_steps = 0;            // 0: derived as t/delta
  double c_margin = 10.0;
  double snapshot_dt = 0.0;
  std::string in_file;
  std::string out_dir = ".";
};

// Registers the full flag set on a subcommand; each command reads the
// subset it needs, so a config file can carry one shared parameter block.
void add_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--j", cfg.j, "injection rate at the origin");
  cmd->add_option("--grid-h", cfg.grid_h, "cell width of the mass grid");
  cmd->add_option("--rmax", cfg.rmax, "truncation radius (0: automatic)");
  cmd->add_option("--delta", cfg.delta, "barrier step / sandwich spacing");
  cmd->add_option("--levels", cfg.levels,
                  "dyadic level or range, e.g. 8 or 3..8");
  cmd->add_option("--t", cfg.t, "evolution time");
  cmd->add_option("--T", cfg.horizon, "quasi-solution horizon");
  cmd->add_option("--eps", cfg.eps,
                  "mass-conservation budget; comma list for ladders");
  cmd->add_option("--tol", cfg.tol, "target gap / shooting tolerance");
  cmd->add_option("--seed", cfg.seed, "Monte Carlo seed");
  cmd->add_option("--paths", cfg.paths, "Monte Carlo path count");
  cmd->add_option("--mc-dt", cfg.mc_dt, "Monte Carlo Euler step");
  cmd->add_option("--preset", cfg.preset,
                  "built-in initial profile: stationary | block | bump");
  cmd->add_option("--a", cfg.a, "origin density of the stationary preset");
  cmd->add_option("--k", cfg.k_steps, "barrier step count (0: t/delta)");
  cmd->add_option("--cmargin", cfg.c_margin, "sandwich margin constant");
  cmd->add_option("--snapshot-dt", cfg.snapshot_dt,
                  "quasi-solution snapshot spacing (0: start/end only)");
  cmd->add_option("--in", cfg.in_file,
                  "input profile (.json, or .csv with --grid-h)");
  cmd->add_option("--out", cfg.out_dir, "output directory");
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

void validate_common(const RunConfig& cfg) {
  require(cfg.j > 0.0, "--j must be > 0");
  require(cfg.grid_h > 0.0, "--grid-h must be > 0");
  require(cfg.tol > 0.0, "--tol must be > 0");
  require(cfg.paths >= 1, "--paths must be >= 1");
  require(cfg.mc_dt > 0.0, "--mc-dt must be > 0");
}

std::vector<double> parse_double_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      require(pos == item.size(), std::string(flag) + ": malformed number");
    } catch (const std::logic_error&) {
      throw UsageError(std::string(flag) + ": malformed number '" + item + "'");
    }
  }
  require(!out.empty(), std::string(flag) + ": empty list");
  return out;
}

std::pair<int, int> parse_levels(const std::string& s, int fallback) {
  if (s.empty()) return {fallback, fallback};
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    const int lo = std::stoi(s.substr(0, dots));
    const int hi = std::stoi(s.substr(dots + 2));
    require(lo >= 1 && hi >= lo, "--levels: need 1 <= lo <= hi");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw UsageError("--levels: expected L or LO..HI, got '" + s + "'");
  }
}

fbflow::MassProfile preset_profile(const RunConfig& cfg) {
  using namespace fbflow;
  if (cfg.preset == "stationary")
    return stationary_profile(cfg.a, cfg.j, cfg.grid_h);
  if (cfg.preset == "block") {
    MassProfile u;
    u.cell_width = cfg.grid_h;
    u.values.assign(static_cast<std::size_t>(std::lround(1.0 / cfg.grid_h)), 1.0);
    return u;
  }
  if (cfg.preset == "bump") {
    // Stationary profile plus a rectangular bump of exactly mass 0.1 near
    // [0.2, 0.4]; the interval snaps to grid breakpoints, the height adjusts.
    MassProfile u = stationary_profile(cfg.a, cfg.j, cfg.grid_h);
    const auto lo = static_cast<std::size_t>(std::lround(0.2 / cfg.grid_h));
    const auto hi = static_cast<std::size_t>(std::lround(0.4 / cfg.grid_h));
    require(hi > lo, "--preset bump: grid too coarse for the bump interval");
    if (u.values.size() < hi) u.values.resize(hi, 0.0);
    const double height = 0.1 / (static_cast<double>(hi - lo) * cfg.grid_h);
    for (std::size_t i = lo; i < hi; ++i) u.values[i] += height;
    return u;
  }
  throw UsageError("--preset: unknown preset '" + cfg.preset +
                   "' (expected stationary | block | bump)");
}

fbflow::MassProfile input_profile(const RunConfig& cfg) {
  if (cfg.in_file.empty()) return preset_profile(cfg);
  const fs::path p(cfg.in_file);
  if (p.extension() == ".json") return fbflow::load_profile_json(p);
  return fbflow::load_profile_csv(p, cfg.grid_h);
}

json config_json(const RunConfig& cfg) {
  return json{{"j", cfg.j},
              {"grid-h", cfg.grid_h},
              {"rmax", cfg.rmax},
              {"delta", cfg.delta},
              {"levels", cfg.levels},
              {"t", cfg.t},
              {"T", cfg.horizon},
              {"eps", cfg.eps},
              {"tol", cfg.tol},
              {"seed", cfg.seed},
              {"paths", cfg.paths},
              {"mc-dt", cfg.mc_dt},
              {"preset", cfg.preset},
              {"a", cfg.a},
              {"k", cfg.k_steps},
              {"cmargin", cfg.c_margin},
              {"snapshot-dt", cfg.snapshot_dt},
              {"in", cfg.in_file},
              {"out", cfg.out_dir}};
}

fs::path prepare_out_dir(const RunConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw fbflow::IoError("cannot create output directory " + dir.string());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const RunConfig& cfg) {
  const json manifest{{"command", command},
                      {"version", kVersion},
                      {"config", config_json(cfg)}};
  fbflow::save_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_barriers(const RunConfig& cfg) {
  using namespace fbflow;
  validate_common(cfg);
  require(cfg.delta > 0.0, "--delta must be > 0");
  require(cfg.t > 0.0, "--t must be > 0");
  const MassProfile u = input_profile(cfg);
  const fs::path dir = prepare_out_dir(cfg);
  write_manifest(dir, "barriers", cfg);

  bool all_ok = true;
  json summary;
  if (!cfg.levels.empty()) {
    // Sweep of dyadic refinements of the step: delta_l = 2^-l * t.
    const auto [lo, hi] = parse_levels(cfg.levels, 0);
    json runs = json::array();
    for (int level = lo; level <= hi; ++level) {
      const double delta = std::ldexp(cfg.t, -level);
      const int k = 1 << level;
      const BarrierRun run = run_barriers(u, delta, cfg.j, k);
      const double max_gap =
          *std::max_element(run.gap_l1.begin(), run.gap_l1.end());
      const double bound = 4.0 * cfg.j * delta + 5.0 * u.cell_width;
      all_ok = all_ok && max_gap <= bound;
      std::ostringstream name;
      name << "barrier_run_L" << level << ".csv";
      std::ostringstream body;
      write_barrier_run_csv(body, run);
      save_text(dir / name.str(), body.str());
      runs.push_back({{"level", level},
                      {"delta", delta},
                      {"k", k},
                      {"max_gap", max_gap},
                      {"gap_bound", bound},
                      {"file", name.str()}});
      std::cout << "level " << level << ": delta = " << delta
                << ", max gap = " << max_gap << " (bound " << bound << ")\n";
    }
    summary = json{{"runs", runs}, {"all_ok", all_ok}};
  } else {
    const int k = cfg.k_steps > 0
                      ? cfg.k_steps
                      : static_cast<int>(std::lround(cfg.t / cfg.delta));
    require(k >= 1, "--k (or t/delta) must give at least one step");
    const BarrierRun run = run_barriers(u, cfg.delta, cfg.j, k);
    const double max_gap = *std::max_element(run.gap_l1.begin(), run.gap_l1.end());
    const double bound = 4.0 * cfg.j * cfg.delta + 5.0 * u.cell_width;
    all_ok = max_gap <= bound;
    std::ostringstream body;
    write_barrier_run_csv(body, run);
    save_text(dir / "barrier_run.csv", body.str());
    summary = json{{"delta", cfg.delta}, {"j", cfg.j},          {"k", k},
                   {"max_gap", max_gap}, {"gap_bound", bound},  {"all_ok", all_ok}};
    std::cout << "barriers: k = " << k << ", max gap = " << max_gap
              << " (bound " << bound << ")\n";
  }
  save_text(dir / "barrier_summary.json", summary.dump(2) + "\n");
  return all_ok ? 0 : 1;
}

int cmd_separating(const RunConfig& cfg) {
  using namespace fbflow;
  validate_common(cfg);
  require(cfg.t > 0.0, "--t must be > 0");
  const MassProfile u = input_profile(cfg);
  const fs::path dir = prepare_out_dir(cfg);
  write_manifest(dir, "separating", cfg);

  const auto [lo, hi] = parse_levels(cfg.levels, 12);
  const SeparatingElement elem = separating_element(u, cfg.t, cfg.j, cfg.tol, hi);

  std::ostringstream body;
  write_profile_csv(body, elem.profile);
  save_text(dir / "separating_profile.csv", body.str());
  std::ostringstream cert;
  write_separating_certificate(cert, elem, cfg.tol);
  save_text(dir / "separating_certificate.json", cert.str());
  std::cout << "separating element at t = " << cfg.t << ": certified gap "
            << elem.certified_gap << " after " << elem.levels_used
            << " levels\n";
  return 0;
}

int cmd_quasi(const RunConfig& cfg) {
  using namespace fbflow;
  validate_common(cfg);
  require(cfg.horizon > 0.0, "--T must be > 0");
  const std::vector<double> eps_list = parse_double_list(cfg.eps, "--eps");
  require(eps_list.size() == 1, "quasi takes a single --eps (use validate for ladders)");
  const double eps = eps_list.front();
  require(eps > 0.0, "--eps must be > 0");

  const MassProfile u = input_profile(cfg);
  const fs::path dir = prepare_out_dir(cfg);
  write_manifest(dir, "quasi", cfg);

  QuasiOptions qo;
  qo.snapshot_dt = cfg.snapshot_dt;
  const QuasiSolution qs = build_quasi_solution(u, cfg.horizon, eps, cfg.j, qo);

  std::ostringstream edge_body;
  write_edge_csv(edge_body, qs.edge);
  save_text(dir / "edge.csv", edge_body.str());
  std::ostringstream manifest_body;
  write_quasi_manifest(manifest_body, qs);
  save_text(dir / "quasi_manifest.json", manifest_body.str());

  std::ostringstream index;
  index << "index,t,file\n";
  for (std::size_t i = 0; i < qs.snapshots.size(); ++i) {
    std::ostringstream name;
    name << "snapshot_" << i << ".csv";
    std::ostringstream body;
    write_profile_csv(body, qs.snapshots[i].second);
    save_text(dir / name.str(), body.str());
    index << i << "," << qs.snapshots[i].first << "," << name.str() << "\n";
  }
  save_text(dir / "snapshots.csv", index.str());

  std::cout << "quasi-solution: " << qs.slice_velocities.size()
            << " slices, max drift " << qs.max_drift << " (budget " << eps
            << ")\n";
  return qs.max_drift <= eps ? 0 : 1;
}

int cmd_validate(const RunConfig& cfg) {
  using namespace fbflow;
  validate_common(cfg);
  require(cfg.horizon > 0.0, "--T must be > 0");
  require(cfg.delta > 0.0, "--delta must be > 0");
  const std::vector<double> eps_list = parse_double_list(cfg.eps, "--eps");
  for (double e : eps_list) require(e > 0.0, "--eps entries must be > 0");

  const MassProfile u = input_profile(cfg);
  const fs::path dir = prepare_out_dir(cfg);
  write_manifest(dir, "validate", cfg);

  bool all_ok = true;
  json runs = json::array();
  std::vector<double> max_margins;
  for (double eps : eps_list) {
    QuasiOptions qo;
    qo.snapshot_dt = cfg.delta;
    const QuasiSolution qs = build_quasi_solution(u, cfg.horizon, eps, cfg.j, qo);
    const SandwichReport rep = sandwich_check(qs, cfg.delta, cfg.c_margin);
    const bool drift_ok = qs.max_drift <= eps;
    all_ok = all_ok && drift_ok && rep.all_pass;
    max_margins.push_back(rep.max_margin);
    runs.push_back({{"eps", eps},
                    {"max_drift", qs.max_drift},
                    {"drift_ok", drift_ok},
                    {"sandwich_max_margin", rep.max_margin},
                    {"sandwich_fitted_c", rep.fitted_c},
                    {"sandwich_pass", rep.all_pass}});
    std::cout << "eps = " << eps << ": drift " << qs.max_drift
              << ", sandwich margin " << rep.max_margin << " (fitted c "
              << rep.fitted_c << ")\n";
  }

  // Margins should not grow as the budget shrinks (the list is taken as
  // given, largest first is conventional).
  bool margins_monotone = true;
  for (std::size_t i = 1; i < max_margins.size(); ++i)
    if (eps_list[i] < eps_list[i - 1])
      margins_monotone =
          margins_monotone && max_margins[i] <= max_margins[i - 1] + 1e-12;
  all_ok = all_ok && margins_monotone;

  // Independent probabilistic check of one shot slice.
  const double t_mc = std::min(0.1, cfg.horizon);
  const double X0 = edge(u);
  const double V = find_velocity(u, X0, t_mc, cfg.j, 1e-6);
  SliceOptions so;
  const double delta_fd =
      solve_slice(u, X0, V, t_mc, cfg.j, 400, so).mass_lost;
  McConfig mc;
  mc.paths = cfg.paths;
  mc.dt = cfg.mc_dt;
  mc.seed = cfg.seed;
  const McEstimate est =
      mc_mass_loss(u, linear_edge(0.0, X0, V, t_mc), t_mc, cfg.j, mc);
  const double sigma = std::max(est.std_error, 1e-12);
  const bool mc_ok = std::abs(delta_fd - est.estimate) <= 3.0 * sigma;
  all_ok = all_ok && mc_ok;
  std::cout << "oracle check: shed " << delta_fd << " vs MC " << est.estimate
            << " +- " << est.std_error << (mc_ok ? " (agree)" : " (DISAGREE)")
            << "\n";

  const json verdict{{"runs", runs},
                     {"margins_monotone", margins_monotone},
                     {"mc_check",
                      {{"t", t_mc},
                       {"velocity", V},
                       {"shed_fd", delta_fd},
                       {"shed_mc", est.estimate},
                       {"std_error", est.std_error},
                       {"ok", mc_ok}}},
                     {"all_ok", all_ok}};
  save_text(dir / "verdict.json", verdict.dump(2) + "\n");
  std::cout << (all_ok ? "validate: all checks passed\n"
                       : "validate: CHECKS FAILED\n");
  return all_ok ? 0 : 1;
}

int cmd_stationary_check(const RunConfig& cfg) {
  using namespace fbflow;
  validate_common(cfg);
  require(cfg.t > 0.0, "--t must be > 0");
  require(cfg.a > 0.0, "--a must be > 0");
  require(cfg.in_file.empty(),
          "--in is not used by stationary-check; it always builds the linear profile");
  const fs::path dir = prepare_out_dir(cfg);
  write_manifest(dir, "stationary-check", cfg);

  const MassProfile u = stationary_profile(cfg.a, cfg.j, cfg.grid_h);
  const double X0 = cfg.a / (2.0 * cfg.j);
  const int nt = std::clamp(static_cast<int>(std::ceil(cfg.t * 4000.0)), 16, 2000);

  SliceOptions so;
  const SliceResult still = solve_slice(u, X0, 0.0, cfg.t, cfg.j, nt, so);
  const double V = find_velocity(u, X0, cfg.t, cfg.j, cfg.tol);

  const double mass_scale = std::max(1.0, total_mass(u));
  const bool ok = still.mass_balance_residual <= 1e-10 * mass_scale &&
                  still.flux0_residual <= 1e-8 &&
                  still.dirichlet_residual <= 1e-8 &&
                  std::abs(still.mass_lost - cfg.j * cfg.t) <= 1e-10 * mass_scale &&
                  std::abs(V) <= 0.05;

  const json report{{"a", cfg.a},
                    {"j", cfg.j},
                    {"t", cfg.t},
                    {"mass_lost", still.mass_lost},
                    {"mass_balance_residual", still.mass_balance_residual},
                    {"flux0_residual", still.flux0_residual},
                    {"dirichlet_residual", still.dirichlet_residual},
                    {"sup_drift", still.sup_drift},
                    {"velocity", V},
                    {"ok", ok}};
  save_text(dir / "stationary_report.json", report.dump(2) + "\n");
  std::cout << "stationary check: shed " << still.mass_lost << " (want "
            << cfg.j * cfg.t << "), V = " << V << (ok ? " -> ok" : " -> FAIL")
            << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// JSON config file: values become defaults, explicit flags win.

std::string stringify(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::vector<std::string> apply_config_file(const std::vector<std::string>& args) {
  std::string config_path;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      config_path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      out.push_back(a);
    }
  }
  if (config_path.empty()) return out;

  std::ifstream is(config_path);
  if (!is.is_open())
    throw fbflow::IoError("cannot open config file " + config_path);
  json cfg;
  try {
    cfg = json::parse(is);
  } catch (const json::exception& e) {
    throw fbflow::IoError("config file " + config_path + ": " + e.what());
  }
  if (!cfg.is_object())
    throw fbflow::IoError("config file " + config_path +
                          ": expected a JSON object of flag values");

  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(out.begin(), out.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) out.push_back(flag + "=" + stringify(value));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mass-conserving free-boundary flow toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  RunConfig cfg;
  CLI::App* barriers = app.add_subcommand(
      "barriers", "run the paired lower/upper step evolutions");
  CLI::App* separating = app.add_subcommand(
      "separating", "refine the dyadic ladder to a separating element");
  CLI::App* quasi = app.add_subcommand(
      "quasi", "build a mass-tracking trajectory with a shot edge velocity");
  CLI::App* validate = app.add_subcommand(
      "validate", "drift + sandwich + Monte Carlo cross-checks over an eps ladder");
  CLI::App* stationary = app.add_subcommand(
      "stationary-check", "verify the linear profile is a fixed point");
  for (CLI::App* c : {barriers, separating, quasi, validate, stationary})
    add_flags(c, cfg);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = apply_config_file(args);
  } catch (const fbflow::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 64;
  }

  try {
    // CLI11 wants the vector reversed and without the program name.
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (barriers->parsed()) return cmd_barriers(cfg);
    if (separating->parsed()) return cmd_separating(cfg);
    if (quasi->parsed()) return cmd_quasi(cfg);
    if (validate->parsed()) return cmd_validate(cfg);
    if (stationary->parsed()) return cmd_stationary_check(cfg);
    std::cerr << "error: no subcommand\n";
    return 64;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 64;
  } catch (const fbflow::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
