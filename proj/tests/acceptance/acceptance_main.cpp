// Acceptance suite: end-to-end checks of the solver against its
// documented guarantees, one pass/fail line per criterion. Run all with
// no arguments or a single criterion by number. Exits with the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ksfv/diagnostics.hpp"
#include "ksfv/mms.hpp"
#include "ksfv/model.hpp"
#include "ksfv/presets.hpp"
#include "ksfv/solver.hpp"
#include "ksfv/sweep.hpp"

using namespace ksfv;

namespace {

const double kPi = 3.14159265358979323846;

struct Criterion {
    int number;
    const char* name;
    std::function<bool(std::string&)> body;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

ModelParams params(double m, double n, double delta, int alpha, int dim) {
    ModelParams p;
    p.m = m;
    p.n = n;
    p.delta = delta;
    p.alpha = alpha;
    p.dim = dim;
    return p;
}

bool admissible(double m, double n, int d) {
    return check_admissibility(params(m, n, 0.0, 1, d)).admissible;
}

// Smooth nonnegative no-flux-compatible random initial data on [0,1].
State random_smooth_state(const GridPtr& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    double ar[4], ac[4];
    for (int k = 0; k < 4; ++k) {
        ar[k] = u(rng);
        ac[k] = u(rng);
    }
    State s;
    s.rho = Field(g);
    s.c = Field(g);
    for (int i = 0; i < g->active_count(); ++i) {
        double x = g->cell_center(i)[0];
        double vr = 1.0, vc = 1.0;
        for (int k = 0; k < 4; ++k) {
            vr += ar[k] * std::cos((k + 1) * kPi * x);
            vc += ac[k] * std::cos((k + 1) * kPi * x);
        }
        s.rho[i] = vr;
        s.c[i] = vc;
    }
    s.t = 0.0;
    return s;
}

// Shared 1D run for the conservation and entropy-ledger criteria:
// alpha = 1, m = 1, n = 2, delta = 0.1, N = 200, tau = 1e-3, 1000 steps.
const Trajectory& ledger_run() {
    static Trajectory traj = [] {
        GridPtr g = build_grid(RegionSpec::box(1, {0, 0, 0}, {1, 1, 1}), {200});
        StepperConfig cfg;
        cfg.tau = 1e-3;
        cfg.adapt = false;
        RunOptions opts;
        opts.t_end = 1.0;
        return run(random_smooth_state(g, 20240612), params(1, 2, 0.1, 1, 1), cfg, opts);
    }();
    return traj;
}

// ---------------------------------------------------------------- 1 ----
bool criterion_admissibility(std::string& detail) {
    const double t0 = now_seconds();
    bool ok = true;

    // d=2, m=1: admissible exactly for 1 < n <= 2
    for (double n : {1.0 + 1e-6, 1.2, 1.7, 2.0}) ok = ok && admissible(1.0, n, 2);
    for (double n : {2.0 + 1e-9, 2.5, 3.0}) ok = ok && !admissible(1.0, n, 2);

    // d=3, m=1: admissible exactly for 6/5 < n <= 2
    for (double n : {1.21, 1.5, 2.0}) ok = ok && admissible(1.0, n, 3);
    for (double n : {1.1, 1.2, 1.0 + 1e-6, 2.0 + 1e-9}) ok = ok && !admissible(1.0, n, 3);

    // d=2 fast diffusion: 1/3 < m < 1, (3-m)/2 < n <= m+1
    // (dyadic m so the n = m+1 boundary is exactly representable)
    for (double m : {0.375, 0.5, 0.75, 0.875}) {
        const double lower = (3.0 - m) / 2.0;
        ok = ok && admissible(m, 0.5 * (lower + m + 1.0), 2);
        ok = ok && admissible(m, m + 1.0, 2);
        ok = ok && !admissible(m, lower - 1e-12, 2);
        ok = ok && !admissible(m, m + 1.0 + 1e-9, 2);
    }

    // d=3 fast diffusion: 1/2 < m < 1, 3(3-m)/5 < n <= m+1
    for (double m : {0.5625, 0.75, 0.875}) {
        const double lower = 3.0 * (3.0 - m) / 5.0;
        ok = ok && admissible(m, 0.5 * (lower + m + 1.0), 3);
        ok = ok && admissible(m, m + 1.0, 3);
        ok = ok && !admissible(m, lower - 1e-12, 3);
        ok = ok && !admissible(m, m + 1.0 + 1e-9, 3);
    }

    // at or below the fast-diffusion band edge nothing is admissible
    ok = ok && !admissible(1.0 / 3.0, 4.0 / 3.0, 2);
    ok = ok && !admissible(0.5, 1.5, 3);

    const double dt = now_seconds() - t0;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "golden table exact, %.3f s", dt);
    detail = buf;
    return ok && dt < 1.0;
}

// ---------------------------------------------------------------- 2 ----
bool criterion_conservation(std::string& detail) {
    const Trajectory& traj = ledger_run();
    if (traj.status != RunStatus::completed || traj.accepted_steps < 1000) {
        detail = "run did not complete 1000 steps";
        return false;
    }
    const double mass0 = traj.records.front().mass;
    double worst = 0.0;
    for (const auto& rec : traj.records)
        worst = std::max(worst, std::abs(rec.mass - mass0) / std::abs(mass0));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "relative drift %.3e over %ld steps (tol 1e-8)", worst,
                  traj.accepted_steps);
    detail = buf;
    return worst <= 1e-8;
}

// ---------------------------------------------------------------- 3 ----
bool criterion_entropy_ledger(std::string& detail) {
    const Trajectory& traj = ledger_run();
    if (traj.status != RunStatus::completed) {
        detail = "run failed";
        return false;
    }
    int violations = 0;
    double worst = -1e300;
    for (std::size_t k = 1; k < traj.records.size(); ++k) {
        const auto& cur = traj.records[k];
        const auto& prev = traj.records[k - 1];
        const double tau = cur.t - prev.t;
        const double lhs =
            (cur.entropy_E - prev.entropy_E) / tau + cur.production_rho + cur.production_c;
        const double rhs = cur.coupling + 1e-6 * std::max(1.0, std::abs(cur.entropy_E));
        worst = std::max(worst, lhs - rhs);
        if (lhs > rhs) ++violations;
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d violations over %zu steps, worst excess %.3e",
                  violations, traj.records.size() - 1, worst);
    detail = buf;
    return violations == 0;
}

// ---------------------------------------------------------------- 4 ----
bool criterion_decay(std::string& detail) {
    const double t0 = now_seconds();
    ParsedConfig cfg = *preset("decay1d");
    GridPtr g = build_grid(cfg.run.region, cfg.run.resolution);
    State init;
    init.rho = evaluate_expression(cfg.run.initial_rho, g);  // 1 + 0.3 cos(pi x)
    init.c = Field(g, 0.0);
    SteadyState steady = homogeneous_steady_state(integrate(init.rho), g->domain_volume());

    const double kappa = decay_rate_kappa(cfg.run.model.delta, cfg.decay.poincare_const);
    if (std::abs(kappa - 0.25) > 1e-12) {
        detail = "kappa != 1/4";
        return false;
    }

    // c - c* through the deviation form of the elliptic constraint so the
    // measurement error scales with the decaying signal
    const double psi_star = steady.rho_star * steady.rho_star;
    std::vector<std::pair<double, double>> rho_err, c_err;
    RunOptions opts;
    opts.t_end = cfg.run.t_end;
    opts.observer = [&](const State& s, const DiagnosticsRecord&) {
        Field dr(g), dev_rhs(g), psi_dev(g);
        for (int i = 0; i < dr.size(); ++i) {
            dr[i] = s.rho[i] - steady.rho_star;
            psi_dev[i] = s.rho[i] * s.rho[i] - psi_star;
            dev_rhs[i] = dr[i] + cfg.run.model.delta * psi_dev[i];
        }
        Field w = elliptic_solve(dev_rhs, cfg.run.stepper);
        Field dc(g);
        for (int i = 0; i < dc.size(); ++i) dc[i] = w[i] - cfg.run.model.delta * psi_dev[i];
        rho_err.push_back({s.t, lp_norm(dr, 2.0)});
        c_err.push_back({s.t, lp_norm(dc, 1.0)});
    };

    Trajectory traj = run(init, cfg.run.model, cfg.run.stepper, opts);
    if (traj.status != RunStatus::completed) {
        detail = "decay run ended with " + to_string(traj.status);
        return false;
    }
    DecayFit fr = fit_decay_rate(rho_err, 0.5, 6.0, kappa);
    DecayFit fc = fit_decay_rate(c_err, 0.5, 6.0, kappa);
    const double dt = now_seconds() - t0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "rho rate %.3f, c rate %.3f vs 0.8*kappa = %.3f; %.1f s",
                  fr.fitted_rate, fc.fitted_rate, 0.8 * kappa, dt);
    detail = buf;
    return fr.fitted_rate >= 0.8 * kappa && fc.fitted_rate >= 0.8 * kappa && dt < 60.0;
}

// ---------------------------------------------------------------- 5 ----
bool criterion_blowup_dichotomy(std::string& detail) {
    // (a) delta = 0: the run must end in a blow-up verdict before t = 1
    ParsedConfig blowup = *preset("ks2d-fast-blowup");
    GridPtr g = build_grid(blowup.run.region, blowup.run.resolution);
    State init;
    init.rho = evaluate_expression(blowup.run.initial_rho, g);
    init.c = Field(g, 0.0);
    RunOptions opts;
    opts.t_end = blowup.run.t_end;
    Trajectory ta = run(init, blowup.run.model, blowup.run.stepper, opts);
    const bool a_ok = ta.status == RunStatus::blow_up_suspected && ta.final_state.t < 1.0;

    // (b) delta = 0.005, n = 3/2: completes to t_end = 10, bounded
    ParsedConfig cross = *preset("ks2d-fast-cross");
    State init_b;
    init_b.rho = init.rho;
    init_b.c = Field(g, 0.0);
    RunOptions opts_b;
    opts_b.t_end = cross.run.t_end;
    Trajectory tb = run(init_b, cross.run.model, cross.run.stepper, opts_b);
    const bool b_ok = tb.status == RunStatus::completed &&
                      tb.records.back().rho_max < cross.run.stepper.rho_max_cap;

    // (c) delta sweep toward 0 at n = 3/2: the terminal density maximum,
    // clipped at the blow-up cap (where the run has left the resolvable
    // regime), must not decrease as delta drops
    SweepSpec sweep;
    sweep.base = cross.run;
    sweep.base.t_end = 1.0;
    sweep.base.snapshot_times.clear();
    sweep.parameter = "delta";
    sweep.values = {1e-4, 1e-6, 1e-8, 0.0};
    auto results = run_sweep(sweep);
    bool c_ok = true;
    std::string seq;
    double prev = 0.0;
    const double cap = sweep.base.stepper.rho_max_cap;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].failed) c_ok = false;
        const double clipped = std::min(results[i].rho_max_final, cap);
        char num[32];
        std::snprintf(num, sizeof(num), "%.0f", clipped);
        seq += (i ? ", " : "") + std::string(num);
        if (i > 0 && clipped < prev * (1.0 - 1e-9)) c_ok = false;
        prev = clipped;
    }
    // the trend is genuine: the delta = 0 end sits far above delta = 1e-4
    c_ok = c_ok && std::min(results.back().rho_max_final, cap) >
                       2.0 * std::min(results.front().rho_max_final, cap);

    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "(a) %s at t=%.3f; (b) %s rho_max=%.1f; (c) terminal rho_max [%s]",
                  to_string(ta.status).c_str(), ta.final_state.t, to_string(tb.status).c_str(),
                  tb.records.back().rho_max, seq.c_str());
    detail = buf;
    return a_ok && b_ok && c_ok;
}

// ---------------------------------------------------------------- 6 ----
bool criterion_n_sweep(std::string& detail) {
    ParsedConfig base = *preset("ks2d-fast-cross");
    SweepSpec sweep;
    sweep.base = base.run;
    sweep.base.resolution = {96};
    sweep.base.t_end = 50.0;
    sweep.base.snapshot_times.clear();
    sweep.base.stepper.tau_max = 0.05;
    sweep.parameter = "n";
    sweep.values = {1.25, 1.375, 1.5, 2.0};
    auto results = run_sweep(sweep);

    bool ok = true;
    std::string seq;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].failed || results[i].status != RunStatus::completed) ok = false;
        char num[32];
        std::snprintf(num, sizeof(num), "%.1f", results[i].rho_max_final);
        seq += (i ? ", " : "") + std::string(num);
        if (i > 0 && results[i].rho_max_final >= results[i - 1].rho_max_final) ok = false;
    }
    detail = "final rho_max by n in {5/4, 11/8, 3/2, 2}: [" + seq + "] (strictly decreasing)";
    return ok;
}

// ---------------------------------------------------------------- 7 ----
bool criterion_mms_convergence(std::string& detail) {
    const double t0 = now_seconds();
    ConvergenceTable table = run_convergence(*mms_preset("mms1d"));
    const double dt = now_seconds() - t0;
    if (table.rows.size() != 4) {
        detail = "expected 4 levels";
        return false;
    }
    std::string orders;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        char num[32];
        std::snprintf(num, sizeof(num), "%.3f", table.rows[i].order);
        orders += (i > 1 ? ", " : "") + std::string(num);
    }
    char buf[200];
    std::snprintf(buf, sizeof(buf), "L2 orders [%s], last pair %.3f (need >= 1.8); %.1f s",
                  orders.c_str(), table.rows.back().order, dt);
    detail = buf;
    return table.rows.back().order >= 1.8 && !table.suspected_inconsistency && dt < 60.0;
}

// ---------------------------------------------------------------- 8 ----
bool criterion_structural(std::string& detail) {
    std::mt19937 rng(777);
    bool ok = true;

    // symmetric part of the mobility matrix is PSD on admissible samples
    std::uniform_real_distribution<double> um(0.05, 3.0), un(1.0 + 1e-9, 4.0), ur(0.0, 100.0),
        ud(0.0, 2.0);
    std::uniform_int_distribution<int> udim(1, 3);
    int seen = 0;
    while (seen < 10000) {
        ModelParams p = params(um(rng), un(rng), ud(rng), 1, udim(rng));
        if (!check_admissibility(p).admissible) continue;
        ++seen;
        Mat2 a = diffusion_matrix(ur(rng), p);
        ok = ok && (a.a12 + a.a21 == 0.0) && a.a11 >= 0.0 && a.a22 >= 0.0;
    }

    // theta in (0, p) on the d >= 3 first branch
    std::uniform_real_distribution<double> up(1.0 / 3.0 + 1e-9, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const double p = up(rng);
        GnTheta gt = gn_theta(p, 1.2, 3);
        ok = ok && gt.theta > 0.0 && gt.theta < p && gt.usable;
    }

    // summation by parts to 1e-12 on random fields, box and disk masks
    std::uniform_real_distribution<double> uf(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        GridPtr g = trial % 2 == 0
                        ? build_grid(RegionSpec::box(2, {0, 0, 0}, {1, 1, 0}), {24, 24})
                        : build_grid(RegionSpec::ball(2, {0, 0, 0}, 1.0), {24, 24});
        Field f(g);
        for (int i = 0; i < f.size(); ++i) f[i] = uf(rng);
        Field lf = diffusive_flux_divergence(f);
        double ip = 0.0;
        for (int i = 0; i < f.size(); ++i) ip += f[i] * lf[i];
        ip *= g->cell_volume();
        const double gsq = gradient_sq_integral(f);
        ok = ok && std::abs(gsq + ip) <= 1e-12 * std::max(1.0, gsq);
    }

    detail = "PSD x 10^4, theta range x 10^3, summation-by-parts x 10 grids";
    return ok;
}

// ---------------------------------------------------------------- 9 ----
bool criterion_steady_fixed_point(std::string& detail) {
    bool ok = true;
    double worst = 0.0;
    for (int alpha : {1, 0}) {
        GridPtr g = build_grid(RegionSpec::box(1, {0, 0, 0}, {1, 1, 1}), {64});
        ModelParams p = params(1.0, 2.0, 0.2, alpha, 1);
        StepperConfig cfg;
        cfg.tau = 1e-2;
        State s;
        s.rho = Field(g, 1.7);
        s.c = Field(g, 1.7);
        Stepper stepper(g, p, cfg);
        for (int k = 0; k < 100 && ok; ++k) {
            StepOutcome out = stepper.step(s, cfg.tau, nullptr);
            if (out.status != StepStatus::accepted) {
                ok = false;
                break;
            }
            s = std::move(out.state);
        }
        for (int i = 0; i < s.rho.size(); ++i) {
            worst = std::max(worst, std::abs(s.rho[i] - 1.7));
            worst = std::max(worst, std::abs(s.c[i] - 1.7));
        }
        ok = ok && worst <= 100 * cfg.linear_tol;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max deviation %.3e after 100 steps in both modes", worst);
    detail = buf;
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "admissibility golden table", criterion_admissibility},
        {2, "mass conservation over 1000 steps", criterion_conservation},
        {3, "discrete entropy ledger per accepted step", criterion_entropy_ledger},
        {4, "exponential decay rate vs kappa", criterion_decay},
        {5, "blow-up dichotomy and delta-sweep ordering", criterion_blowup_dichotomy},
        {6, "n-sweep regularization trend", criterion_n_sweep},
        {7, "manufactured-solution spatial order", criterion_mms_convergence},
        {8, "structural properties", criterion_structural},
        {9, "homogeneous steady state is a fixed point", criterion_steady_fixed_point},
    };

    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.number != only) continue;
        std::string detail;
        bool pass = false;
        const double t0 = now_seconds();
        try {
            pass = c.body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt = now_seconds() - t0;
        std::printf("[%s] criterion %d: %s -- %s (%.1f s)\n", pass ? "PASS" : "FAIL", c.number,
                    c.name, detail.c_str(), dt);
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    return failures;
}
