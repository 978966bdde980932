#pragma once
// Parameter sweeps: one run per grid point over m, n or delta, executed
// concurrently (runs are independent; shared inputs are immutable), with
// one summary row per run.

#include <optional>
#include <string>
#include <vector>

#include "ksfv/config.hpp"
#include "ksfv/solver.hpp"

namespace ksfv {

struct SweepResult {
    double value = 0.0;        // the swept parameter value
    bool failed = false;       // run threw; error stored in `error`
    RunStatus status = RunStatus::completed;
    double t_final = 0.0;
    double rho_max_final = 0.0;
    std::optional<double> fitted_decay_rate;  // when a decay fit applies
    std::string error;
};

struct SweepSpec {
    RunConfig base;
    std::string parameter;       // "m", "n" or "delta"
    std::vector<double> values;
    int max_concurrency = 0;     // 0 = hardware concurrency
    // when set, each run writes diagnostics into <out_root>/<param>=<value>/
    std::string out_root;
};

// Individual run failures are recorded and the sweep continues.
std::vector<SweepResult> run_sweep(const SweepSpec& spec);

void write_sweep_csv(const std::string& path, const std::string& parameter,
                     const std::vector<SweepResult>& results);

}  // namespace ksfv
