#include "fbflow/serialization.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "fbflow/errors.hpp"

namespace fbflow {

namespace {

// Shortest round-trip decimal form.
std::string fmt(double x) {
  std::array<char, 32> buf;
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw IoError("cannot format a double");
  return std::string(buf.data(), end);
}

double parse_double(const std::string& s, const std::string& context) {
  double out = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last)
    throw IoError(context + ": malformed number '" + s + "'");
  return out;
}

// Splits a CSV line at commas; no quoting, these files never need it.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string next_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return line;
  }
  return {};
}

}  // namespace

void write_profile_csv(std::ostream& os, const MassProfile& u) {
  os << "atom," << fmt(u.atom) << "\n";
  os << "cell_index,density\n";
  for (std::size_t i = 0; i < u.values.size(); ++i)
    os << i << "," << fmt(u.values[i]) << "\n";
}

MassProfile read_profile_csv(std::istream& is, double cell_width) {
  MassProfile u;
  u.cell_width = cell_width;

  const std::string atom_line = next_line(is);
  auto fields = split_csv(atom_line);
  if (fields.size() != 2 || fields[0] != "atom")
    throw IoError("profile CSV: expected first line 'atom,<value>'");
  u.atom = parse_double(fields[1], "profile CSV atom");

  const std::string header = next_line(is);
  if (header != "cell_index,density")
    throw IoError("profile CSV: expected header 'cell_index,density'");

  std::string line;
  std::size_t expect = 0;
  while (!(line = next_line(is)).empty()) {
    fields = split_csv(line);
    if (fields.size() != 2)
      throw IoError("profile CSV: malformed row '" + line + "'");
    if (parse_double(fields[0], "profile CSV index") !=
        static_cast<double>(expect))
      throw IoError("profile CSV: cell indices must run 0,1,2,...");
    u.values.push_back(parse_double(fields[1], "profile CSV density"));
    ++expect;
  }
  u.validate();
  return u;
}

void write_profile_json(std::ostream& os, const MassProfile& u) {
  nlohmann::json j{
      {"atom", u.atom}, {"cell_width", u.cell_width}, {"values", u.values}};
  os << j.dump(2) << "\n";
}

MassProfile read_profile_json(std::istream& is) {
  MassProfile u;
  try {
    const nlohmann::json j = nlohmann::json::parse(is);
    u.atom = j.at("atom").get<double>();
    u.cell_width = j.at("cell_width").get<double>();
    u.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("profile JSON: ") + e.what());
  }
  u.validate();
  return u;
}

void write_barrier_run_csv(std::ostream& os, const BarrierRun& run) {
  os << "k,r,F_lower,F_upper\n";
  for (const BarrierStep& step : run.steps) {
    const std::vector<double> tl = density_tails(step.lower);
    const std::vector<double> tu = density_tails(step.upper);
    const double h = step.lower.cell_width;
    const std::size_t n = std::max(tl.size(), tu.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double fl = i == 0 ? total_mass(step.lower)
                               : (i < tl.size() ? tl[i] : 0.0);
      const double fu = i == 0 ? total_mass(step.upper)
                               : (i < tu.size() ? tu[i] : 0.0);
      os << step.k << "," << fmt(static_cast<double>(i) * h) << "," << fmt(fl)
         << "," << fmt(fu) << "\n";
    }
  }
}

void write_separating_certificate(std::ostream& os, const SeparatingElement& elem,
                                  double tol) {
  nlohmann::json j{{"t", elem.time},
                   {"tol", tol},
                   {"certified_gap", elem.certified_gap},
                   {"levels_used", elem.levels_used}};
  os << j.dump(2) << "\n";
}

void write_edge_csv(std::ostream& os, const EdgePath& path) {
  os << "t,X\n";
  for (const auto& [t, x] : path.breakpoints)
    os << fmt(t) << "," << fmt(x) << "\n";
}

void write_quasi_manifest(std::ostream& os, const QuasiSolution& qs) {
  nlohmann::json j{{"epsilon", qs.epsilon},
                   {"j", qs.j},
                   {"T", qs.horizon},
                   {"slice_count", qs.slice_velocities.size()},
                   {"max_drift", qs.max_drift}};
  os << j.dump(2) << "\n";
}

void write_mc_estimate_json(std::ostream& os, const McEstimate& est,
                            const McConfig& cfg) {
  nlohmann::json j{{"estimate", est.estimate},
                   {"std_error", est.std_error},
                   {"n_paths", cfg.paths},
                   {"dt", cfg.dt},
                   {"seed", cfg.seed}};
  os << j.dump(2) << "\n";
}

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os.is_open()) throw IoError("cannot open for writing: " + file.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is.is_open()) throw IoError("cannot open for reading: " + file.string());
  return is;
}

void finish(std::ofstream& os, const std::filesystem::path& file) {
  os.flush();
  if (!os.good()) throw IoError("write failed: " + file.string());
}

}  // namespace

void save_profile_csv(const std::filesystem::path& file, const MassProfile& u) {
  auto os = open_out(file);
  write_profile_csv(os, u);
  finish(os, file);
}

MassProfile load_profile_csv(const std::filesystem::path& file, double cell_width) {
  auto is = open_in(file);
  return read_profile_csv(is, cell_width);
}

void save_profile_json(const std::filesystem::path& file, const MassProfile& u) {
  auto os = open_out(file);
  write_profile_json(os, u);
  finish(os, file);
}

MassProfile load_profile_json(const std::filesystem::path& file) {
  auto is = open_in(file);
  return read_profile_json(is);
}

void save_text(const std::filesystem::path& file, const std::string& contents) {
  auto os = open_out(file);
  os << contents;
  finish(os, file);
}

}  // namespace fbflow
