#pragma once
// Time integration of the coupled system
//
//   d/dt rho = Lap(pi_eps(rho)^m) - div(rho grad c) + f_rho
//   alpha d/dt c = Lap c + delta Lap(pi_0(rho)^n) + rho - c + f_c
//
// by implicit Euler. For alpha = 1 the stacked (rho, c) system is solved
// by Newton with an analytic Jacobian; the upwind switching direction is
// frozen at the current iterate (the donor value and the driving
// difference are differentiated). For alpha = 0 each step solves the
// elliptic equation -Lap v + v = rho + delta pi_0(rho)^n for
// v = c + delta rho^n, then advances rho implicitly in the v form
//
//   d/dt rho = Lap(pi_eps(rho)^m + delta n/(n+1) pi_0(rho)^(n+1))
//              - div(rho grad v)
//
// and re-derives (v, c) from the new density.
//
// pi_0(rho) = max(rho, 0); pi_eps(rho) = max(rho, eps_fd) applies to the
// cell-diffusion exponent only when m < 1 (fast diffusion floor).

#include <functional>
#include <optional>
#include <vector>

#include "ksfv/diagnostics.hpp"
#include "ksfv/expr.hpp"
#include "ksfv/grid.hpp"
#include "ksfv/model.hpp"
#include "ksfv/sparse.hpp"

namespace ksfv {

struct State {
    Field rho;
    Field c;
    double t = 0.0;
};

struct StepperConfig {
    double tau = 1e-3;
    double tau_min = 1e-12;
    double tau_max = 1e-1;
    double newton_tol = 1e-10;   // relative residual
    int newton_max_iter = 30;
    double linear_tol = 1e-10;   // relative residual
    int linear_max_iter = 5000;
    double fd_floor = 0.005;     // eps_fd, used only when m < 1
    bool adapt = true;
    double growth = 1.2;         // tau growth factor after cheap accepts
    double shrink = 2.0;         // tau shrink factor on rejection
    int cheap_newton_iters = 5;  // a step is "cheap" below this count
    int cheap_accepts_before_growth = 3;
    double rho_max_cap = 1e6;    // hard blow-up cap on rho_max
    double blowup_growth_factor = 10.0;  // rho_max growth over the window
    int blowup_window = 20;             // accepted steps

    void validate() const;

    bool operator==(const StepperConfig&) const = default;
};

enum class StepStatus { accepted, rejected_retry, blow_up_suspected, solver_failure };

struct StepOutcome {
    StepStatus status = StepStatus::solver_failure;
    State state;  // advanced state when accepted, otherwise the input state
    int newton_iterations = 0;
    long linear_iterations = 0;
    double tau_used = 0.0;
};

// Optional manufactured-solution source terms, evaluated at the new time
// level each step. `c` is ignored in the parabolic-elliptic stepper.
struct SourceTerms {
    std::optional<Expression> rho;
    std::optional<Expression> c;
    bool empty() const { return !rho && !c; }
};

// Residual of the implicit system at a trial state (used by the steppers
// and exposed for verification): component order matches the unknowns.
// For alpha = 1 both residuals are returned; for alpha = 0 only `rho` is
// meaningful and `v` must be the frozen drift potential.
struct ImplicitResidual {
    Field rho;
    Field c;
};

ImplicitResidual residual_fully_parabolic(const State& trial, const State& previous, double tau,
                                          const ModelParams& params, const StepperConfig& cfg,
                                          const SourceTerms* forcing = nullptr);

Field residual_parabolic_elliptic(const Field& rho_trial, const Field& rho_previous,
                                  const Field& v, double tau, const ModelParams& params,
                                  const StepperConfig& cfg,
                                  const SourceTerms* forcing = nullptr, double t_new = 0.0);

// Solves -Lap v + v = rhs with no-flux boundaries (SPD, CG). Throws
// std::runtime_error if the iteration cap is exceeded.
Field elliptic_solve(const Field& rhs, const StepperConfig& cfg);

// One-shot step attempts at cfg.tau (no retry logic; `run` drives retries).
StepOutcome step_fully_parabolic(const State& state, const ModelParams& params,
                                 const StepperConfig& cfg, const SourceTerms* forcing = nullptr);
StepOutcome step_parabolic_elliptic(const State& state, const ModelParams& params,
                                    const StepperConfig& cfg,
                                    const SourceTerms* forcing = nullptr);

namespace detail {
// Sorted local stencil {i} + face neighbors, with the position of each
// slot (0 = self, 1+k = neighbor slot k) inside the sorted column list.
struct LocalStencil {
    std::vector<int> cols;
    std::array<int, 7> pos;
};
}  // namespace detail

// Persistent stepper: keeps the sparsity pattern and linear-solver state
// between steps. Dispatches on params.alpha.
class Stepper {
public:
    Stepper(GridPtr grid, ModelParams params, StepperConfig cfg);

    StepOutcome step(const State& state, double tau, const SourceTerms* forcing = nullptr);

    const ModelParams& params() const { return params_; }
    const StepperConfig& config() const { return cfg_; }

private:
    GridPtr grid_;
    ModelParams params_;
    StepperConfig cfg_;

    CsrMatrix jac_;            // coupled (alpha=1) or rho-only (alpha=0) pattern
    CsrMatrix helmholtz_;      // -Lap + I, built once (alpha=0)
    std::vector<detail::LocalStencil> stencils_;
    std::vector<double> v_guess_;  // warm start for the elliptic solves

    void build_pattern_coupled();
    void build_pattern_scalar();
    void build_helmholtz();

    StepOutcome step_coupled(const State& state, double tau, const SourceTerms* forcing);
    StepOutcome step_elliptic(const State& state, double tau, const SourceTerms* forcing);

    bool solve_elliptic_for_v(const Field& rho, Field& v, long& linear_iters);
};

enum class RunStatus { completed, blow_up_suspected, solver_failure };

struct RunOptions {
    double t_end = 1.0;
    std::vector<double> snapshot_times;  // steps land on these exactly
    std::optional<SteadyState> steady;   // enables the relative-entropy column
    SourceTerms forcing;
    // Called after every accepted step.
    std::function<void(const State&, const DiagnosticsRecord&)> observer;
};

struct Trajectory {
    RunStatus status = RunStatus::completed;
    State final_state;
    std::vector<DiagnosticsRecord> records;  // initial state + accepted steps
    std::vector<std::pair<double, State>> snapshots;
    BlowUpTrigger trigger = BlowUpTrigger::none;
    long accepted_steps = 0;
    long rejected_steps = 0;
    long total_newton_iterations = 0;
    long total_linear_iterations = 0;
};

Trajectory run(const State& initial, const ModelParams& params, const StepperConfig& cfg,
               const RunOptions& options);

std::string to_string(RunStatus status);
std::string to_string(StepStatus status);

}  // namespace ksfv
