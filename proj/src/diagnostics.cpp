#include "ksfv/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ksfv/solver.hpp"

namespace ksfv {

namespace {

// x^n extended to negative bases: the exact power for integer n, the
// signed power sign(x)|x|^n otherwise.
double signed_pow(double x, double n, bool& used_signed_branch) {
    if (x >= 0.0) return std::pow(x, n);
    if (std::nearbyint(n) == n) return std::pow(x, n);
    used_signed_branch = true;
    return -std::pow(-x, n);
}

}  // namespace

double entropy(const State& state, const ModelParams& params) {
    params.validate();
    const double vol = state.rho.grid()->cell_volume();
    if (params.alpha == 1 && params.delta <= 0.0)
        throw std::domain_error("entropy: alpha = 1 requires delta > 0");
    double s = 0.0;
    for (int i = 0; i < state.rho.size(); ++i) {
        double rho = state.rho[i];
        if (rho < 0.0) throw std::domain_error("entropy: rho must be >= 0");
        s += std::pow(rho, params.n) / (params.n - 1.0);
        if (params.alpha == 1) {
            double c = state.c[i];
            s += c * c / (2.0 * params.delta);
        }
    }
    return s * vol;
}

RelativeEntropy relative_entropy(const State& state, const ModelParams& params,
                                 const SteadyState& steady) {
    params.validate();
    if (params.alpha == 1 && params.delta <= 0.0)
        throw std::domain_error("relative_entropy: alpha = 1 requires delta > 0");
    const double vol = state.rho.grid()->cell_volume();
    RelativeEntropy out;
    double s = 0.0;
    for (int i = 0; i < state.rho.size(); ++i) {
        s += signed_pow(state.rho[i] - steady.rho_star, params.n, out.signed_value) /
             (params.n - 1.0);
        if (params.alpha == 1) {
            double dc = state.c[i] - steady.c_star;
            s += dc * dc / (2.0 * params.delta);
        }
    }
    out.value = s * vol;
    return out;
}

ProductionTerms production_terms(const State& state, const ModelParams& params) {
    params.validate();
    if (!(params.delta > 0.0)) throw std::domain_error("production_terms: requires delta > 0");
    const GridPtr grid = state.rho.grid();
    const double vol = grid->cell_volume();
    const double p = (params.m + params.n - 1.0) / 2.0;

    Field rho_p(grid);
    for (int i = 0; i < state.rho.size(); ++i) {
        if (state.rho[i] < 0.0) throw std::domain_error("production_terms: rho must be >= 0");
        rho_p[i] = std::pow(state.rho[i], p);
    }

    ProductionTerms out;
    out.production_rho = params.m * params.n / (p * p) * gradient_sq_integral(rho_p);
    const double c_l2 = lp_norm(state.c, 2.0);
    out.production_c = (gradient_sq_integral(state.c) + c_l2 * c_l2) / params.delta;
    double rc = 0.0;
    for (int i = 0; i < state.rho.size(); ++i) rc += state.rho[i] * state.c[i];
    out.coupling = rc * vol / params.delta;
    return out;
}

DiagnosticsRecord compute_record(const State& state, const ModelParams& params,
                                 const std::optional<SteadyState>& steady) {
    DiagnosticsRecord rec;
    rec.t = state.t;
    rec.mass = integrate(state.rho);
    rec.rho_max = lp_norm(state.rho, std::numeric_limits<double>::infinity());
    rec.rho_Ln = lp_norm(state.rho, params.n);
    rec.c_L2 = lp_norm(state.c, 2.0);

    const double vol = state.rho.grid()->cell_volume();
    const double p = (params.m + params.n - 1.0) / 2.0;
    Field rho_p(state.rho.grid());
    double ent_rho = 0.0;
    for (int i = 0; i < state.rho.size(); ++i) {
        const double r = std::max(state.rho[i], 0.0);
        rho_p[i] = std::pow(r, p);
        ent_rho += std::pow(r, params.n);
    }
    ent_rho *= vol / (params.n - 1.0);
    rec.production_rho = params.m * params.n / (p * p) * gradient_sq_integral(rho_p);

    if (params.delta > 0.0) {
        rec.production_c = (gradient_sq_integral(state.c) + rec.c_L2 * rec.c_L2) / params.delta;
        double rc = 0.0;
        for (int i = 0; i < state.rho.size(); ++i) rc += state.rho[i] * state.c[i];
        rec.coupling = rc * vol / params.delta;
        rec.entropy_E = params.alpha == 1
                            ? ent_rho + rec.c_L2 * rec.c_L2 / (2.0 * params.delta)
                            : ent_rho;
    } else {
        // production_c and coupling carry a 1/delta weight and are
        // undefined at delta = 0; report zeros and the rho part of E.
        rec.production_c = 0.0;
        rec.coupling = 0.0;
        rec.entropy_E = ent_rho;
    }

    if (steady) rec.relative_entropy = relative_entropy(state, params, *steady).value;
    return rec;
}

DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& series, double t_start,
                        double t_end, double reference_kappa) {
    std::vector<std::pair<double, double>> used;
    for (const auto& [t, v] : series) {
        if (t < t_start || t > t_end) continue;
        if (v < 1e-13) break;  // floating-point floor: cut the window here
        used.push_back({t, std::log(v)});
    }
    if (used.size() < 10)
        throw std::invalid_argument("fit_decay_rate: need >= 10 usable samples, have " +
                                    std::to_string(used.size()));

    double st = 0.0, sy = 0.0;
    for (const auto& [t, y] : used) {
        st += t;
        sy += y;
    }
    const double nn = static_cast<double>(used.size());
    const double tbar = st / nn, ybar = sy / nn;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (const auto& [t, y] : used) {
        stt += (t - tbar) * (t - tbar);
        sty += (t - tbar) * (y - ybar);
        syy += (y - ybar) * (y - ybar);
    }
    if (stt == 0.0) throw std::invalid_argument("fit_decay_rate: degenerate time window");
    const double slope = sty / stt;

    DecayFit fit;
    fit.fitted_rate = -slope;
    fit.t_start = used.front().first;
    fit.t_end = used.back().first;
    fit.samples = static_cast<int>(used.size());
    fit.reference_kappa = reference_kappa;
    const double ss_res = syy - slope * sty;
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

BlowUpReport blow_up_report(const Trajectory& trajectory) {
    BlowUpReport rep;
    rep.suspected = trajectory.status == RunStatus::blow_up_suspected;
    rep.t_estimate = trajectory.final_state.t;
    rep.trigger = trajectory.trigger;
    rep.rho_max_history.reserve(trajectory.records.size());
    for (const auto& r : trajectory.records) rep.rho_max_history.push_back({r.t, r.rho_max});
    return rep;
}

std::string to_string(BlowUpTrigger trigger) {
    switch (trigger) {
        case BlowUpTrigger::none: return "none";
        case BlowUpTrigger::tau_underflow: return "tau_underflow";
        case BlowUpTrigger::hard_cap: return "hard_cap";
    }
    return "unknown";
}

}  // namespace ksfv
