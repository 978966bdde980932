#pragma once
// Manufactured-solution convergence harness. A case carries a closed-form
// exact pair (rho_e, c_e) in x (and t) together with the forcing terms
// that make the pair an exact solution; the forcing expressions are
// derived symbolically ahead of time and shipped with the case, never
// recomputed numerically at runtime.

#include <string>
#include <vector>

#include "ksfv/config.hpp"
#include "ksfv/grid.hpp"
#include "ksfv/model.hpp"
#include "ksfv/solver.hpp"

namespace ksfv {

struct MmsCase {
    ModelParams params;
    RegionSpec region;              // box
    std::string exact_rho;          // expressions in x[,y,z] and t
    std::string exact_c;
    std::string forcing_rho;
    std::string forcing_c;
    std::vector<int> levels;        // cells per axis, finest last
    double tau_ref = 1e-3;          // tau at levels[0]; scaled by (h/h_ref)^2
    double t_end = 0.25;
    StepperConfig stepper;

    void validate() const;  // throws std::invalid_argument
};

struct ConvergenceRow {
    int cells = 0;
    double h = 0.0;
    double tau = 0.0;
    double error_l2 = 0.0;  // L2 error of rho at t_end
    double order = 0.0;     // log2(e_prev / e_this); 0 for the first row
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    // set when an observed order collapses below 0.5 (forcing/exact pair
    // likely inconsistent)
    bool suspected_inconsistency = false;
};

// Runs every refinement level to t_end with fixed tau per level and
// measures the L2 error of rho against the exact expression.
ConvergenceTable run_convergence(const MmsCase& mms);

// Same file format as run configs, with an extra [mms] section.
MmsCase parse_mms_case_file(const std::string& path);

void write_convergence_csv(const std::string& path, const ConvergenceTable& table);

}  // namespace ksfv
