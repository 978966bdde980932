#pragma once
// File emission: legacy VTK STRUCTURED_POINTS snapshots (cell centers as
// points, inactive cells written as 0), flat per-cell CSV snapshots, and
// the diagnostics CSV stream.

#include <string>
#include <utility>
#include <vector>

#include "ksfv/diagnostics.hpp"
#include "ksfv/grid.hpp"

namespace ksfv {

// One SCALARS block per (name, field) pair under a single POINT_DATA.
void write_vtk(const std::string& path,
               const std::vector<std::pair<std::string, const Field*>>& fields);

// One row per lattice cell: per-axis index, center coordinates, value
// (0 for inactive cells). Column count follows the grid dimension.
void write_field_csv(const std::string& path, const Field& field);

// Header t,mass,E,rho_max,rho_Ln,c_L2,prod_rho,prod_c,coupling,E_rel with
// one row per record at full double precision.
void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRecord>& records);

// %.17g rendering used by all writers.
std::string format_double(double v);

}  // namespace ksfv
