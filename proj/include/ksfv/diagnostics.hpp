#pragma once
// Entropy and norm instrumentation: the entropy functional
//   E(rho, c) = int( rho^n/(n-1) + alpha c^2/(2 delta) ),
// its production terms, the relative entropy against a homogeneous steady
// state, exponential decay-rate fitting, and blow-up reporting.
//
// All quadratures are the midpoint/cell-average rule, identical to the
// norms used by the time steppers, so the per-step entropy inequality can
// be asserted discretely without quadrature mismatch.

#include <optional>
#include <string>
#include <vector>

#include "ksfv/grid.hpp"
#include "ksfv/model.hpp"

namespace ksfv {

struct State;       // solver.hpp
struct Trajectory;  // solver.hpp

struct DiagnosticsRecord {
    double t = 0.0;
    double mass = 0.0;
    double entropy_E = 0.0;
    double rho_max = 0.0;
    double rho_Ln = 0.0;           // L^n norm of rho
    double c_L2 = 0.0;
    double production_rho = 0.0;   // (m n / p^2) ||grad rho^p||^2
    double production_c = 0.0;     // (1/delta) (||grad c||^2 + ||c||^2)
    double coupling = 0.0;         // (1/delta) int rho c
    double relative_entropy = 0.0; // 0 unless a steady state is registered
};

// E(rho, c). For alpha = 1 requires delta > 0 (throws std::domain_error);
// for alpha = 0 the c term is absent and delta may be 0.
double entropy(const State& state, const ModelParams& params);

struct RelativeEntropy {
    double value = 0.0;
    // The integrand (rho - rho*)^n is sign-definite only for even integer
    // n (or when rho >= rho* everywhere); otherwise `signed_value` is set
    // and `value` is the signed quantity with x^n := sign(x) |x|^n for
    // non-integer n.
    bool signed_value = false;
};

RelativeEntropy relative_entropy(const State& state, const ModelParams& params,
                                 const SteadyState& steady);

struct ProductionTerms {
    double production_rho = 0.0;
    double production_c = 0.0;
    double coupling = 0.0;
};

// Requires delta > 0 and rho >= 0 (throws std::domain_error).
ProductionTerms production_terms(const State& state, const ModelParams& params);

// One full record; fills relative_entropy when `steady` is present. The
// production terms are reported as 0 when delta = 0 (they are undefined),
// and entropy_E degrades to the rho part when alpha = 1 and delta = 0.
DiagnosticsRecord compute_record(const State& state, const ModelParams& params,
                                 const std::optional<SteadyState>& steady = std::nullopt);

struct DecayFit {
    double fitted_rate = 0.0;
    double t_start = 0.0, t_end = 0.0;  // window actually used
    double r_squared = 0.0;
    double reference_kappa = 0.0;
    int samples = 0;
};

// Least-squares slope of log(value) against t over the samples falling in
// [t_start, t_end]; the window is cut at the first value below 1e-13 to
// stay clear of the floating-point floor. Requires >= 10 usable samples
// (throws std::invalid_argument otherwise). fitted_rate is -slope.
DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& series, double t_start,
                        double t_end, double reference_kappa = 0.0);

enum class BlowUpTrigger { none, tau_underflow, hard_cap };

struct BlowUpReport {
    bool suspected = false;
    double t_estimate = 0.0;  // last accepted time
    std::vector<std::pair<double, double>> rho_max_history;
    BlowUpTrigger trigger = BlowUpTrigger::none;
};

BlowUpReport blow_up_report(const Trajectory& trajectory);

std::string to_string(BlowUpTrigger trigger);

}  // namespace ksfv
