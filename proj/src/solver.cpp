#include "ksfv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace ksfv {

namespace {

// Nonlinearities of the implicit system. pi_eps floors the cell-diffusion
// argument only in the fast-diffusion regime m < 1.
struct Nonlinearity {
    double m, n, delta, floor_m;

    Nonlinearity(const ModelParams& p, const StepperConfig& cfg)
        : m(p.m), n(p.n), delta(p.delta), floor_m(p.m < 1.0 ? cfg.fd_floor : 0.0) {}

    double phi(double rho) const { return std::pow(std::max(rho, floor_m), m); }
    double dphi(double rho) const {
        if (m < 1.0) return rho > floor_m ? m * std::pow(rho, m - 1.0) : 0.0;
        return m * std::pow(std::max(rho, 0.0), m - 1.0);  // pow(0,0) = 1 covers m = 1
    }
    double psi(double rho) const { return std::pow(std::max(rho, 0.0), n); }
    double dpsi(double rho) const { return n * std::pow(std::max(rho, 0.0), n - 1.0); }

    // v-form composite diffusion for the parabolic-elliptic step
    double phi_v(double rho) const {
        return phi(rho) + delta * n / (n + 1.0) * std::pow(std::max(rho, 0.0), n + 1.0);
    }
    double dphi_v(double rho) const { return dphi(rho) + delta * n * psi(rho); }
};

inline double donor_density(double dc, double rho_here, double rho_there) {
    double r = dc > 0.0 ? rho_here : rho_there;
    return r > 0.0 ? r : 0.0;
}

double norm2_vec(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Fully parabolic residual with pre-evaluated forcing fields.
// When abs_scale_sq is nonnull it receives the summed squares of the
// per-entry absolute-value bounds; epsilon times its square root is the
// double-precision floor of the residual evaluation.
void residual_fp_impl(const Grid& g, const Nonlinearity& nl, const std::vector<double>& rho,
                      const std::vector<double>& c, const std::vector<double>& rho_old,
                      const std::vector<double>& c_old, double tau, const Field* f_rho,
                      const Field* f_c, std::vector<double>& out_rho,
                      std::vector<double>& out_c, double* abs_scale_sq = nullptr) {
    const int nc = g.active_count();
    out_rho.resize(static_cast<std::size_t>(nc));
    out_c.resize(static_cast<std::size_t>(nc));
    double scale_sq = 0.0;
    for (int i = 0; i < nc; ++i) {
        const auto& nb = g.neighbors(i);
        double diff_rho = 0.0, adv = 0.0, diff_c = 0.0, cross = 0.0;
        double mag_rho = 0.0, mag_c = 0.0;
        const double phi_i = nl.phi(rho[static_cast<std::size_t>(i)]);
        const double psi_i = nl.psi(rho[static_cast<std::size_t>(i)]);
        for (int k = 0; k < 2 * g.dim(); ++k) {
            int j = nb[static_cast<std::size_t>(k)];
            if (j < 0) continue;
            const double w = g.inv_h2(k);
            const double rj = rho[static_cast<std::size_t>(j)];
            const double dc = c[static_cast<std::size_t>(j)] - c[static_cast<std::size_t>(i)];
            const double phi_j = nl.phi(rj);
            const double psi_j = nl.psi(rj);
            const double face_rho = donor_density(dc, rho[static_cast<std::size_t>(i)], rj);
            diff_rho += w * (phi_j - phi_i);
            adv += w * face_rho * dc;
            diff_c += w * dc;
            cross += w * (psi_j - psi_i);
            if (abs_scale_sq) {
                mag_rho += w * (std::abs(phi_j) + std::abs(phi_i)) + w * std::abs(face_rho * dc);
                mag_c += w * (std::abs(c[static_cast<std::size_t>(j)]) +
                              std::abs(c[static_cast<std::size_t>(i)])) +
                         nl.delta * w * (std::abs(psi_j) + std::abs(psi_i));
            }
        }
        const std::size_t si = static_cast<std::size_t>(i);
        out_rho[si] = (rho[si] - rho_old[si]) / tau - diff_rho + adv;
        out_c[si] = (c[si] - c_old[si]) / tau - diff_c - nl.delta * cross - rho[si] + c[si];
        if (f_rho) out_rho[si] -= (*f_rho)[i];
        if (f_c) out_c[si] -= (*f_c)[i];
        if (abs_scale_sq) {
            mag_rho += (std::abs(rho[si]) + std::abs(rho_old[si])) / tau +
                       (f_rho ? std::abs((*f_rho)[i]) : 0.0);
            mag_c += (std::abs(c[si]) + std::abs(c_old[si])) / tau + std::abs(rho[si]) +
                     std::abs(c[si]) + (f_c ? std::abs((*f_c)[i]) : 0.0);
            scale_sq += mag_rho * mag_rho + mag_c * mag_c;
        }
    }
    if (abs_scale_sq) *abs_scale_sq = scale_sq;
}

// Parabolic-elliptic rho residual with the drift potential v frozen.
void residual_pe_impl(const Grid& g, const Nonlinearity& nl, const std::vector<double>& rho,
                      const std::vector<double>& rho_old, const std::vector<double>& v,
                      double tau, const Field* f_rho, std::vector<double>& out,
                      double* abs_scale_sq = nullptr) {
    const int nc = g.active_count();
    out.resize(static_cast<std::size_t>(nc));
    double scale_sq = 0.0;
    for (int i = 0; i < nc; ++i) {
        const auto& nb = g.neighbors(i);
        double diff = 0.0, adv = 0.0, mag = 0.0;
        const double phi_i = nl.phi_v(rho[static_cast<std::size_t>(i)]);
        for (int k = 0; k < 2 * g.dim(); ++k) {
            int j = nb[static_cast<std::size_t>(k)];
            if (j < 0) continue;
            const double w = g.inv_h2(k);
            const double rj = rho[static_cast<std::size_t>(j)];
            const double dv = v[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(i)];
            const double phi_j = nl.phi_v(rj);
            const double face_rho = donor_density(dv, rho[static_cast<std::size_t>(i)], rj);
            diff += w * (phi_j - phi_i);
            adv += w * face_rho * dv;
            if (abs_scale_sq)
                mag += w * (std::abs(phi_j) + std::abs(phi_i)) + w * std::abs(face_rho * dv);
        }
        const std::size_t si = static_cast<std::size_t>(i);
        out[si] = (rho[si] - rho_old[si]) / tau - diff + adv;
        if (f_rho) out[si] -= (*f_rho)[i];
        if (abs_scale_sq) {
            mag += (std::abs(rho[si]) + std::abs(rho_old[si])) / tau +
                   (f_rho ? std::abs((*f_rho)[i]) : 0.0);
            scale_sq += mag * mag;
        }
    }
    if (abs_scale_sq) *abs_scale_sq = scale_sq;
}

std::optional<Field> eval_forcing(const std::optional<Expression>& e, const GridPtr& grid,
                                  double t_new) {
    if (!e) return std::nullopt;
    return evaluate_on_grid(*e, grid, t_new);
}

}  // namespace

void StepperConfig::validate() const {
    if (!(tau_min > 0.0 && tau_min <= tau_max))
        throw std::invalid_argument("StepperConfig: need 0 < tau_min <= tau_max");
    if (!(tau >= tau_min && tau <= tau_max))
        throw std::invalid_argument("StepperConfig: need tau_min <= tau <= tau_max");
    if (!(newton_tol > 0.0 && linear_tol > 0.0))
        throw std::invalid_argument("StepperConfig: tolerances must be > 0");
    if (newton_max_iter < 1 || linear_max_iter < 1)
        throw std::invalid_argument("StepperConfig: iteration caps must be >= 1");
    if (!(fd_floor >= 0.0)) throw std::invalid_argument("StepperConfig: fd_floor must be >= 0");
    if (!(growth >= 1.0 && shrink > 1.0))
        throw std::invalid_argument("StepperConfig: need growth >= 1, shrink > 1");
    if (!(rho_max_cap > 0.0)) throw std::invalid_argument("StepperConfig: rho_max_cap <= 0");
}

ImplicitResidual residual_fully_parabolic(const State& trial, const State& previous, double tau,
                                          const ModelParams& params, const StepperConfig& cfg,
                                          const SourceTerms* forcing) {
    const GridPtr grid = trial.rho.grid();
    Nonlinearity nl(params, cfg);
    const double t_new = previous.t + tau;
    std::optional<Field> fr, fc;
    if (forcing) {
        fr = eval_forcing(forcing->rho, grid, t_new);
        fc = eval_forcing(forcing->c, grid, t_new);
    }
    ImplicitResidual res{Field(grid), Field(grid)};
    residual_fp_impl(*grid, nl, trial.rho.values(), trial.c.values(), previous.rho.values(),
                     previous.c.values(), tau, fr ? &*fr : nullptr, fc ? &*fc : nullptr,
                     res.rho.values(), res.c.values());
    return res;
}

Field residual_parabolic_elliptic(const Field& rho_trial, const Field& rho_previous,
                                  const Field& v, double tau, const ModelParams& params,
                                  const StepperConfig& cfg, const SourceTerms* forcing,
                                  double t_new) {
    const GridPtr grid = rho_trial.grid();
    Nonlinearity nl(params, cfg);
    std::optional<Field> fr;
    if (forcing) fr = eval_forcing(forcing->rho, grid, t_new);
    Field out(grid);
    residual_pe_impl(*grid, nl, rho_trial.values(), rho_previous.values(), v.values(), tau,
                     fr ? &*fr : nullptr, out.values());
    return out;
}

Field elliptic_solve(const Field& rhs, const StepperConfig& cfg) {
    const GridPtr grid = rhs.grid();
    const Grid& g = *grid;
    const int nc = g.active_count();

    CsrMatrix a;
    a.n = nc;
    a.rowptr.assign(static_cast<std::size_t>(nc) + 1, 0);
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < nc; ++i) {
        int count = 1;
        for (int k = 0; k < 2 * g.dim(); ++k)
            if (g.neighbors(i)[static_cast<std::size_t>(k)] >= 0) ++count;
        a.rowptr[static_cast<std::size_t>(i) + 1] =
            a.rowptr[static_cast<std::size_t>(i)] + count;
    }
    a.cols.resize(static_cast<std::size_t>(a.rowptr.back()));
    a.vals.resize(static_cast<std::size_t>(a.rowptr.back()));
    for (int i = 0; i < nc; ++i) {
        row.clear();
        double diag = 1.0;
        for (int k = 0; k < 2 * g.dim(); ++k) {
            int j = g.neighbors(i)[static_cast<std::size_t>(k)];
            if (j < 0) continue;
            diag += g.inv_h2(k);
            row.push_back({j, -g.inv_h2(k)});
        }
        row.push_back({i, diag});
        std::sort(row.begin(), row.end());
        int base = a.rowptr[static_cast<std::size_t>(i)];
        for (std::size_t q = 0; q < row.size(); ++q) {
            a.cols[static_cast<std::size_t>(base) + q] = row[q].first;
            a.vals[static_cast<std::size_t>(base) + q] = row[q].second;
        }
    }

    Field v(grid);
    v.values() = rhs.values();  // warm start
    auto rep = solve_cg(a, rhs.values(), v.values(), cfg.linear_tol, cfg.linear_max_iter);
    if (!rep.converged)
        throw std::runtime_error("elliptic_solve: CG did not converge (relative residual " +
                                 std::to_string(rep.rel_residual) + ")");
    return v;
}

Stepper::Stepper(GridPtr grid, ModelParams params, StepperConfig cfg)
    : grid_(std::move(grid)), params_(params), cfg_(cfg) {
    params_.validate();
    cfg_.validate();
    if (params_.alpha == 1) {
        build_pattern_coupled();
    } else {
        build_pattern_scalar();
        build_helmholtz();
    }
}

namespace {

detail::LocalStencil local_stencil(const Grid& g, int i) {
    detail::LocalStencil s;
    s.pos.fill(-1);
    s.cols.push_back(i);
    for (int k = 0; k < 2 * g.dim(); ++k) {
        int j = g.neighbors(i)[static_cast<std::size_t>(k)];
        if (j >= 0) s.cols.push_back(j);
    }
    std::sort(s.cols.begin(), s.cols.end());
    auto find = [&](int c) {
        return static_cast<int>(std::lower_bound(s.cols.begin(), s.cols.end(), c) -
                                s.cols.begin());
    };
    s.pos[0] = find(i);
    for (int k = 0; k < 2 * g.dim(); ++k) {
        int j = g.neighbors(i)[static_cast<std::size_t>(k)];
        if (j >= 0) s.pos[static_cast<std::size_t>(k) + 1] = find(j);
    }
    return s;
}

}  // namespace

void Stepper::build_pattern_coupled() {
    // Unknowns are interleaved per cell, (rho_i, c_i) -> (2i, 2i+1): the
    // Gauss-Seidel sweeps then propagate the strong drift coupling
    // between the two equations of a cell and its neighbors.
    const Grid& g = *grid_;
    const int nc = g.active_count();
    jac_.n = 2 * nc;
    jac_.rowptr.assign(static_cast<std::size_t>(2 * nc) + 1, 0);

    std::vector<detail::LocalStencil> stencils;
    stencils.reserve(static_cast<std::size_t>(nc));
    for (int i = 0; i < nc; ++i) stencils.push_back(local_stencil(g, i));

    for (int i = 0; i < nc; ++i) {
        int l = static_cast<int>(stencils[static_cast<std::size_t>(i)].cols.size());
        jac_.rowptr[static_cast<std::size_t>(2 * i) + 1] = 2 * l;      // rho row
        jac_.rowptr[static_cast<std::size_t>(2 * i + 1) + 1] = 2 * l;  // c row
    }
    for (std::size_t i = 1; i < jac_.rowptr.size(); ++i) jac_.rowptr[i] += jac_.rowptr[i - 1];
    jac_.cols.resize(static_cast<std::size_t>(jac_.rowptr.back()));
    jac_.vals.assign(jac_.cols.size(), 0.0);

    for (int i = 0; i < nc; ++i) {
        const auto& st = stencils[static_cast<std::size_t>(i)];
        const int l = static_cast<int>(st.cols.size());
        for (int rowsel = 0; rowsel < 2; ++rowsel) {
            int base = jac_.rowptr[static_cast<std::size_t>(2 * i + rowsel)];
            for (int q = 0; q < l; ++q) {
                jac_.cols[static_cast<std::size_t>(base + 2 * q)] =
                    2 * st.cols[static_cast<std::size_t>(q)];
                jac_.cols[static_cast<std::size_t>(base + 2 * q + 1)] =
                    2 * st.cols[static_cast<std::size_t>(q)] + 1;
            }
        }
    }
    stencils_ = std::move(stencils);
}

void Stepper::build_pattern_scalar() {
    const Grid& g = *grid_;
    const int nc = g.active_count();
    jac_.n = nc;
    jac_.rowptr.assign(static_cast<std::size_t>(nc) + 1, 0);

    std::vector<detail::LocalStencil> stencils;
    stencils.reserve(static_cast<std::size_t>(nc));
    for (int i = 0; i < nc; ++i) stencils.push_back(local_stencil(g, i));

    for (int i = 0; i < nc; ++i)
        jac_.rowptr[static_cast<std::size_t>(i) + 1] =
            static_cast<int>(stencils[static_cast<std::size_t>(i)].cols.size());
    for (std::size_t i = 1; i < jac_.rowptr.size(); ++i) jac_.rowptr[i] += jac_.rowptr[i - 1];
    jac_.cols.resize(static_cast<std::size_t>(jac_.rowptr.back()));
    jac_.vals.assign(jac_.cols.size(), 0.0);

    for (int i = 0; i < nc; ++i) {
        const auto& st = stencils[static_cast<std::size_t>(i)];
        int base = jac_.rowptr[static_cast<std::size_t>(i)];
        for (std::size_t q = 0; q < st.cols.size(); ++q)
            jac_.cols[static_cast<std::size_t>(base) + q] = st.cols[q];
    }
    stencils_ = std::move(stencils);
}

void Stepper::build_helmholtz() {
    const Grid& g = *grid_;
    const int nc = g.active_count();
    helmholtz_.n = nc;
    helmholtz_.rowptr = jac_.rowptr;  // scalar pattern was built first
    helmholtz_.cols = jac_.cols;
    helmholtz_.vals.assign(helmholtz_.cols.size(), 0.0);
    for (int i = 0; i < nc; ++i) {
        const auto& st = stencils_[static_cast<std::size_t>(i)];
        int base = helmholtz_.rowptr[static_cast<std::size_t>(i)];
        double diag = 1.0;
        for (int k = 0; k < 2 * g.dim(); ++k) {
            int j = g.neighbors(i)[static_cast<std::size_t>(k)];
            if (j < 0) continue;
            diag += g.inv_h2(k);
            helmholtz_.vals[static_cast<std::size_t>(base + st.pos[static_cast<std::size_t>(k) + 1])] -=
                g.inv_h2(k);
        }
        helmholtz_.vals[static_cast<std::size_t>(base + st.pos[0])] += diag;
    }
}

StepOutcome Stepper::step(const State& state, double tau, const SourceTerms* forcing) {
    if (state.rho.grid() != grid_ || state.c.grid() != grid_)
        throw std::invalid_argument("Stepper::step: state on a different grid");
    if (params_.alpha == 1) return step_coupled(state, tau, forcing);
    return step_elliptic(state, tau, forcing);
}

StepOutcome Stepper::step_coupled(const State& state, double tau, const SourceTerms* forcing) {
    const Grid& g = *grid_;
    const int nc = g.active_count();
    const Nonlinearity nl(params_, cfg_);
    const double t_new = state.t + tau;

    StepOutcome out;
    out.state = state;
    out.tau_used = tau;

    std::optional<Field> fr, fc;
    if (forcing) {
        fr = eval_forcing(forcing->rho, grid_, t_new);
        fc = eval_forcing(forcing->c, grid_, t_new);
    }

    std::vector<double> rho = state.rho.values();
    std::vector<double> c = state.c.values();
    const std::vector<double>& rho_old = state.rho.values();
    const std::vector<double>& c_old = state.c.values();

    std::vector<double> f_rho, f_c;
    double scale_sq = 0.0;
    residual_fp_impl(g, nl, rho, c, rho_old, c_old, tau, fr ? &*fr : nullptr,
                     fc ? &*fc : nullptr, f_rho, f_c, &scale_sq);

    auto stacked_norm = [&]() {
        double s = 0.0;
        for (double x : f_rho) s += x * x;
        for (double x : f_c) s += x * x;
        return std::sqrt(s);
    };

    const double f0 = stacked_norm();
    // double-precision floor of the residual evaluation
    const double abs_floor = 4.0 * 2.22e-16 * std::sqrt(scale_sq);

    double fnorm = f0;
    std::vector<double> rhs(static_cast<std::size_t>(2 * nc));
    std::vector<double> du(static_cast<std::size_t>(2 * nc), 0.0);

    int it = 0;
    double best = fnorm;
    int stall = 0;
    bool converged = f0 == 0.0;
    while (!converged) {
        if (!std::isfinite(fnorm) || fnorm > 1e6 * f0 + abs_floor || it >= cfg_.newton_max_iter) {
            out.status = StepStatus::rejected_retry;
            out.newton_iterations = it;
            return out;
        }

        // Assemble the Jacobian at the current iterate (interleaved
        // ordering: entry for column cell q, variable v sits at 2q + v).
        std::fill(jac_.vals.begin(), jac_.vals.end(), 0.0);
        for (int i = 0; i < nc; ++i) {
            const auto& st = stencils_[static_cast<std::size_t>(i)];
            const int rb = jac_.rowptr[static_cast<std::size_t>(2 * i)];
            const int rc = jac_.rowptr[static_cast<std::size_t>(2 * i + 1)];
            double* jr = jac_.vals.data() + rb;
            double* jc = jac_.vals.data() + rc;
            const int self = st.pos[0];
            const std::size_t si = static_cast<std::size_t>(i);

            jr[2 * self] += 1.0 / tau;
            jc[2 * self + 1] += 1.0 / tau + 1.0;
            jc[2 * self] -= 1.0;

            for (int k = 0; k < 2 * g.dim(); ++k) {
                int j = g.neighbors(i)[static_cast<std::size_t>(k)];
                if (j < 0) continue;
                const double w = g.inv_h2(k);
                const int pj = st.pos[static_cast<std::size_t>(k) + 1];
                const std::size_t sj = static_cast<std::size_t>(j);

                // diffusion of phi(rho)
                jr[2 * self] += w * nl.dphi(rho[si]);
                jr[2 * pj] -= w * nl.dphi(rho[sj]);
                // drift: the upwind direction is frozen at the current
                // iterate; both the donor density and the c difference are
                // differentiated
                const double dc = c[sj] - c[si];
                const double fd = donor_density(dc, rho[si], rho[sj]);
                jr[2 * self + 1] -= w * fd;
                jr[2 * pj + 1] += w * fd;
                if (dc > 0.0) {
                    if (rho[si] > 0.0) jr[2 * self] += w * dc;
                } else {
                    if (rho[sj] > 0.0) jr[2 * pj] += w * dc;
                }
                // c diffusion
                jc[2 * self + 1] += w;
                jc[2 * pj + 1] -= w;
                // cross diffusion of psi(rho)
                jc[2 * self] += w * nl.delta * nl.dpsi(rho[si]);
                jc[2 * pj] -= w * nl.delta * nl.dpsi(rho[sj]);
            }
        }

        for (int i = 0; i < nc; ++i) {
            rhs[static_cast<std::size_t>(2 * i)] = -f_rho[static_cast<std::size_t>(i)];
            rhs[static_cast<std::size_t>(2 * i + 1)] = -f_c[static_cast<std::size_t>(i)];
        }
        std::fill(du.begin(), du.end(), 0.0);
        // inexact Newton: loose solves while the residual is far from the
        // target, full tightness for the finishing iterations (loose
        // finishing solves leave a persistent lag that floors long decays)
        const double target_now = std::max(cfg_.newton_tol * f0, abs_floor);
        const double eta = fnorm > 1e6 * target_now ? std::max(cfg_.linear_tol, 1e-3)
                                                    : cfg_.linear_tol;
        auto rep = solve_bicgstab(jac_, rhs, du, eta, cfg_.linear_max_iter, Precond::ilu0);
        out.linear_iterations += rep.iterations;
        if (!rep.converged) {
            out.status = StepStatus::rejected_retry;
            out.newton_iterations = it;
            return out;
        }

        for (int i = 0; i < nc; ++i) {
            rho[static_cast<std::size_t>(i)] += du[static_cast<std::size_t>(2 * i)];
            c[static_cast<std::size_t>(i)] += du[static_cast<std::size_t>(2 * i + 1)];
        }
        ++it;

        residual_fp_impl(g, nl, rho, c, rho_old, c_old, tau, fr ? &*fr : nullptr,
                         fc ? &*fc : nullptr, f_rho, f_c);
        fnorm = stacked_norm();
        if (std::getenv("KSFV_DEBUG_NEWTON"))
            std::fprintf(stderr, "  fp newton %d: fnorm=%.3e f0=%.3e\n", it, fnorm, f0);
        const double target = std::max(cfg_.newton_tol * f0, abs_floor);
        converged = fnorm <= target;
        // Quadratic convergence bottoms out at the double-precision floor
        // of the residual evaluation, which for fine grids can sit above
        // newton_tol * f0; accept once the iteration is stalled there.
        if (fnorm < 0.5 * best) {
            best = fnorm;
            stall = 0;
        } else if (++stall >= 3 && best <= 1e-6 * f0 && best <= 1e4 * target && fnorm <= 2.0 * best) {
            converged = true;
        }
    }
    out.newton_iterations = it;

    // Acceptance: clip stray negative densities; reject if the clipped
    // mass is not negligible against the total.
    double clipped = 0.0;
    for (double& x : rho)
        if (x < 0.0) {
            clipped -= x;
            x = 0.0;
        }
    const double mass_old = integrate(state.rho);
    if (clipped * g.cell_volume() > 1e-12 * std::max(mass_old, 1e-300)) {
        out.status = StepStatus::rejected_retry;
        return out;
    }
    for (double x : rho)
        if (!std::isfinite(x)) {
            out.status = StepStatus::rejected_retry;
            return out;
        }
    for (double x : c)
        if (!std::isfinite(x)) {
            out.status = StepStatus::rejected_retry;
            return out;
        }

    out.status = StepStatus::accepted;
    out.state.rho.values() = std::move(rho);
    out.state.c.values() = std::move(c);
    out.state.t = t_new;
    return out;
}

bool Stepper::solve_elliptic_for_v(const Field& rho, Field& v, long& linear_iters) {
    const Nonlinearity nl(params_, cfg_);
    const int nc = grid_->active_count();
    std::vector<double> rhs(static_cast<std::size_t>(nc));
    for (int i = 0; i < nc; ++i)
        rhs[static_cast<std::size_t>(i)] = rho[i] + nl.delta * nl.psi(rho[i]);
    if (v_guess_.size() == rhs.size())
        v.values() = v_guess_;
    else
        v.values() = rhs;
    auto rep = solve_cg(helmholtz_, rhs, v.values(), cfg_.linear_tol, cfg_.linear_max_iter);
    linear_iters += rep.iterations;
    if (rep.converged) v_guess_ = v.values();
    return rep.converged;
}

StepOutcome Stepper::step_elliptic(const State& state, double tau, const SourceTerms* forcing) {
    const Grid& g = *grid_;
    const int nc = g.active_count();
    const Nonlinearity nl(params_, cfg_);
    const double t_new = state.t + tau;

    StepOutcome out;
    out.state = state;
    out.tau_used = tau;

    Field v(grid_);
    if (!solve_elliptic_for_v(state.rho, v, out.linear_iterations)) {
        out.status = StepStatus::solver_failure;
        return out;
    }

    std::optional<Field> fr;
    if (forcing) fr = eval_forcing(forcing->rho, grid_, t_new);

    std::vector<double> rho = state.rho.values();
    const std::vector<double>& rho_old = state.rho.values();
    const std::vector<double>& vv = v.values();

    std::vector<double> f;
    double scale_sq = 0.0;
    residual_pe_impl(g, nl, rho, rho_old, vv, tau, fr ? &*fr : nullptr, f, &scale_sq);
    const double f0 = norm2_vec(f);
    // double-precision floor of the residual evaluation
    const double abs_floor = 4.0 * 2.22e-16 * std::sqrt(scale_sq);

    double fnorm = f0;
    std::vector<double> rhs(static_cast<std::size_t>(nc));
    std::vector<double> du(static_cast<std::size_t>(nc), 0.0);

    int it = 0;
    double best = fnorm;
    int stall = 0;
    bool converged = f0 == 0.0;
    while (!converged) {
        if (!std::isfinite(fnorm) || fnorm > 1e6 * f0 + abs_floor || it >= cfg_.newton_max_iter) {
            out.status = StepStatus::rejected_retry;
            out.newton_iterations = it;
            return out;
        }

        std::fill(jac_.vals.begin(), jac_.vals.end(), 0.0);
        for (int i = 0; i < nc; ++i) {
            const auto& st = stencils_[static_cast<std::size_t>(i)];
            const int base = jac_.rowptr[static_cast<std::size_t>(i)];
            double* row = jac_.vals.data() + base;
            const int self = st.pos[0];
            const std::size_t si = static_cast<std::size_t>(i);
            row[self] += 1.0 / tau;
            for (int k = 0; k < 2 * g.dim(); ++k) {
                int j = g.neighbors(i)[static_cast<std::size_t>(k)];
                if (j < 0) continue;
                const double w = g.inv_h2(k);
                const int pj = st.pos[static_cast<std::size_t>(k) + 1];
                row[self] += w * nl.dphi_v(rho[si]);
                row[pj] -= w * nl.dphi_v(rho[static_cast<std::size_t>(j)]);
                const double dv = vv[static_cast<std::size_t>(j)] - vv[si];
                if (dv > 0.0) {
                    if (rho[si] > 0.0) row[self] += w * dv;
                } else {
                    if (rho[static_cast<std::size_t>(j)] > 0.0) row[pj] += w * dv;
                }
            }
        }

        for (int i = 0; i < nc; ++i) rhs[static_cast<std::size_t>(i)] = -f[static_cast<std::size_t>(i)];
        std::fill(du.begin(), du.end(), 0.0);
        const double target_now = std::max(cfg_.newton_tol * f0, abs_floor);
        const double eta = fnorm > 1e6 * target_now ? std::max(cfg_.linear_tol, 1e-3)
                                                    : cfg_.linear_tol;
        auto rep = solve_bicgstab(jac_, rhs, du, eta, cfg_.linear_max_iter, Precond::ilu0);
        out.linear_iterations += rep.iterations;
        if (!rep.converged) {
            out.status = StepStatus::rejected_retry;
            out.newton_iterations = it;
            return out;
        }
        for (int i = 0; i < nc; ++i) rho[static_cast<std::size_t>(i)] += du[static_cast<std::size_t>(i)];
        ++it;
        residual_pe_impl(g, nl, rho, rho_old, vv, tau, fr ? &*fr : nullptr, f);
        fnorm = norm2_vec(f);
        if (std::getenv("KSFV_DEBUG_NEWTON"))
            std::fprintf(stderr, "  pe newton %d: fnorm=%.3e f0=%.3e\n", it, fnorm, f0);
        const double target = std::max(cfg_.newton_tol * f0, abs_floor);
        converged = fnorm <= target;
        if (fnorm < 0.5 * best) {
            best = fnorm;
            stall = 0;
        } else if (++stall >= 3 && best <= 1e-6 * f0 && best <= 1e4 * target && fnorm <= 2.0 * best) {
            converged = true;
        }
    }
    out.newton_iterations = it;

    double clipped = 0.0;
    for (double& x : rho)
        if (x < 0.0) {
            clipped -= x;
            x = 0.0;
        }
    const double mass_old = integrate(state.rho);
    if (clipped * g.cell_volume() > 1e-12 * std::max(mass_old, 1e-300)) {
        out.status = StepStatus::rejected_retry;
        return out;
    }
    for (double x : rho)
        if (!std::isfinite(x)) {
            out.status = StepStatus::rejected_retry;
            return out;
        }

    // Re-derive (v, c) from the accepted density.
    Field rho_new(grid_);
    rho_new.values() = rho;
    Field v_new(grid_);
    if (!solve_elliptic_for_v(rho_new, v_new, out.linear_iterations)) {
        out.status = StepStatus::solver_failure;
        return out;
    }
    Field c_new(grid_);
    for (int i = 0; i < nc; ++i) c_new[i] = v_new[i] - nl.delta * nl.psi(rho_new[i]);

    out.status = StepStatus::accepted;
    out.state.rho = std::move(rho_new);
    out.state.c = std::move(c_new);
    out.state.t = t_new;
    return out;
}

StepOutcome step_fully_parabolic(const State& state, const ModelParams& params,
                                 const StepperConfig& cfg, const SourceTerms* forcing) {
    if (params.alpha != 1)
        throw std::invalid_argument("step_fully_parabolic: requires alpha = 1");
    Stepper s(state.rho.grid(), params, cfg);
    return s.step(state, cfg.tau, forcing);
}

StepOutcome step_parabolic_elliptic(const State& state, const ModelParams& params,
                                    const StepperConfig& cfg, const SourceTerms* forcing) {
    if (params.alpha != 0)
        throw std::invalid_argument("step_parabolic_elliptic: requires alpha = 0");
    Stepper s(state.rho.grid(), params, cfg);
    return s.step(state, cfg.tau, forcing);
}

Trajectory run(const State& initial, const ModelParams& params, const StepperConfig& cfg,
               const RunOptions& options) {
    params.validate();
    cfg.validate();
    if (!initial.rho.grid() || initial.rho.grid() != initial.c.grid())
        throw std::invalid_argument("run: rho and c must live on the same grid");
    for (int i = 0; i < initial.rho.size(); ++i)
        if (initial.rho[i] < 0.0)
            throw std::invalid_argument("run: initial density must be nonnegative");
    initial.rho.ensure_finite("run: initial rho");
    initial.c.ensure_finite("run: initial c");

    Trajectory traj;
    Stepper stepper(initial.rho.grid(), params, cfg);
    State state = initial;

    traj.records.push_back(compute_record(state, params, options.steady));
    if (options.observer) options.observer(state, traj.records.back());

    // Step targets: snapshot times and the final time, strictly increasing.
    std::vector<double> targets = options.snapshot_times;
    targets.push_back(options.t_end);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    auto is_snapshot = [&](double t) {
        for (double s : options.snapshot_times)
            if (s == t) return true;
        return false;
    };

    double tau = std::clamp(cfg.tau, cfg.tau_min, cfg.tau_max);
    int cheap_streak = 0;
    const double t_eps = 1e-12 * std::max(1.0, std::abs(options.t_end));

    while (state.t < options.t_end - t_eps) {
        double next_target = options.t_end;
        for (double s : targets)
            if (s > state.t + t_eps) {
                next_target = s;
                break;
            }
        const bool lands = state.t + tau >= next_target - t_eps;
        const double tau_step = lands ? next_target - state.t : tau;

        StepOutcome outcome = stepper.step(state, tau_step, &options.forcing);
        if (outcome.status == StepStatus::accepted) {
            state = std::move(outcome.state);
            if (lands) state.t = next_target;
            ++traj.accepted_steps;
            traj.total_newton_iterations += outcome.newton_iterations;
            traj.total_linear_iterations += outcome.linear_iterations;

            traj.records.push_back(compute_record(state, params, options.steady));
            if (options.observer) options.observer(state, traj.records.back());

            if (lands && is_snapshot(next_target)) traj.snapshots.push_back({state.t, state});

            if (traj.records.back().rho_max > cfg.rho_max_cap) {
                traj.status = RunStatus::blow_up_suspected;
                traj.trigger = BlowUpTrigger::hard_cap;
                break;
            }

            if (outcome.newton_iterations < cfg.cheap_newton_iters)
                ++cheap_streak;
            else
                cheap_streak = 0;
            if (cfg.adapt && cheap_streak >= cfg.cheap_accepts_before_growth) {
                tau = std::min(tau * cfg.growth, cfg.tau_max);
                cheap_streak = 0;
            }
        } else if (outcome.status == StepStatus::rejected_retry) {
            ++traj.rejected_steps;
            traj.total_linear_iterations += outcome.linear_iterations;
            tau /= cfg.shrink;
            cheap_streak = 0;
            if (tau < cfg.tau_min) {
                // tau underflow: declare blow-up if the density maximum has
                // been growing across the recent accepted steps.
                const auto& rec = traj.records;
                const std::size_t w =
                    std::min<std::size_t>(static_cast<std::size_t>(cfg.blowup_window),
                                          rec.size() - 1);
                bool grew = false;
                if (w >= 1) {
                    const double first = rec[rec.size() - 1 - w].rho_max;
                    const double last = rec.back().rho_max;
                    bool monotone = last > first;
                    for (std::size_t q = rec.size() - w; q < rec.size(); ++q)
                        if (rec[q].rho_max < rec[q - 1].rho_max) monotone = false;
                    grew = last >= cfg.blowup_growth_factor * std::max(first, 1e-300) ||
                           (monotone &&
                            w == static_cast<std::size_t>(cfg.blowup_window));
                }
                traj.status = grew ? RunStatus::blow_up_suspected : RunStatus::solver_failure;
                traj.trigger = grew ? BlowUpTrigger::tau_underflow : BlowUpTrigger::none;
                break;
            }
        } else {
            traj.status = RunStatus::solver_failure;
            break;
        }
    }

    traj.final_state = std::move(state);
    return traj;
}

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::completed: return "completed";
        case RunStatus::blow_up_suspected: return "blow_up_suspected";
        case RunStatus::solver_failure: return "solver_failure";
    }
    return "unknown";
}

std::string to_string(StepStatus status) {
    switch (status) {
        case StepStatus::accepted: return "accepted";
        case StepStatus::rejected_retry: return "rejected_retry";
        case StepStatus::blow_up_suspected: return "blow_up_suspected";
        case StepStatus::solver_failure: return "solver_failure";
    }
    return "unknown";
}

}  // namespace ksfv
