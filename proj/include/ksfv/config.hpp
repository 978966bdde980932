#pragma once
// Run configuration: flat key = value text with bracketed section headers.
// Files are hand-editable and round-trip exactly (full-precision doubles).
// Any key can be overridden through the environment as
// KSFV_<SECTION>_<KEY> (e.g. KSFV_MODEL_DELTA=0.01).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ksfv/grid.hpp"
#include "ksfv/model.hpp"
#include "ksfv/solver.hpp"

namespace ksfv {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line)
        : std::runtime_error("config line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct RunConfig {
    ModelParams model;
    RegionSpec region;
    std::vector<int> resolution{64};
    StepperConfig stepper;
    double t_end = 1.0;
    std::string initial_rho = "0";
    std::string initial_c = "0";
    std::string forcing_rho;  // optional manufactured-solution sources
    std::string forcing_c;
    std::vector<double> snapshot_times;
    std::string output_dir = "ksfv-out";
    std::uint64_t seed = 0;

    // Parses/validates expressions and cross-field invariants; throws.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

// Decay-study settings read by the `decay` command (optional section).
struct DecayConfig {
    double poincare_const = 0.0;  // 0 = derive L/pi for 1D boxes
    double fit_t_start = -1.0;    // <0 = drop the first 20% of the horizon
    double fit_t_end = -1.0;      // <0 = t_end

    bool operator==(const DecayConfig&) const = default;
};

struct ParsedConfig {
    RunConfig run;
    DecayConfig decay;
};

ParsedConfig parse_run_config(std::istream& in);
ParsedConfig parse_run_config_file(const std::string& path);

// Writes a config that parses back to an identical RunConfig.
void write_run_config(std::ostream& out, const RunConfig& cfg, const DecayConfig* decay = nullptr);
std::string run_config_to_string(const RunConfig& cfg, const DecayConfig* decay = nullptr);

// Applies KSFV_<SECTION>_<KEY> environment overrides in place.
void apply_env_overrides(ParsedConfig& cfg);

}  // namespace ksfv
