#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fbflow/barriers.hpp"
#include "fbflow/mass_profile.hpp"
#include "fbflow/mc_oracle.hpp"
#include "fbflow/moving_boundary.hpp"

namespace fbflow {

// CSV schema for profiles: first line "atom,<value>", second line the
// column header "cell_index,density", then one row per cell.  The cell
// width is not part of the CSV and must be supplied on read; the JSON
// form {atom, cell_width, values} is self-contained.
void write_profile_csv(std::ostream& os, const MassProfile& u);
MassProfile read_profile_csv(std::istream& is, double cell_width);
void write_profile_json(std::ostream& os, const MassProfile& u);
MassProfile read_profile_json(std::istream& is);

// One row per recorded step and breakpoint: k, r, F_lower, F_upper
// (tail masses, the atom counted at r = 0 only).
void write_barrier_run_csv(std::ostream& os, const BarrierRun& run);

// Certificate {t, tol, certified_gap, levels_used} for a separating element
// produced at tolerance tol.
void write_separating_certificate(std::ostream& os, const SeparatingElement& elem,
                                  double tol);

// Edge path as CSV rows (t, X_t).
void write_edge_csv(std::ostream& os, const EdgePath& path);

// Quasi-solution manifest {epsilon, j, T, slice_count, max_drift}.
void write_quasi_manifest(std::ostream& os, const QuasiSolution& qs);

// Monte Carlo estimate {estimate, std_error, n_paths, dt, seed}.
void write_mc_estimate_json(std::ostream& os, const McEstimate& est,
                            const McConfig& cfg);

// File-based convenience wrappers; open/parse failures throw IoError.
void save_profile_csv(const std::filesystem::path& file, const MassProfile& u);
MassProfile load_profile_csv(const std::filesystem::path& file, double cell_width);
void save_profile_json(const std::filesystem::path& file, const MassProfile& u);
MassProfile load_profile_json(const std::filesystem::path& file);
void save_text(const std::filesystem::path& file, const std::string& contents);

}  // namespace fbflow
