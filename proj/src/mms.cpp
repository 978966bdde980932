#include "ksfv/mms.hpp"

#include <cmath>
#include <fstream>

#include "ksfv/io.hpp"
#include "section_reader.hpp"

namespace ksfv {

void MmsCase::validate() const {
    params.validate();
    region.validate();
    if (region.kind != RegionSpec::Kind::box)
        throw std::invalid_argument("MmsCase: region must be a box");
    if (levels.size() < 3)
        throw std::invalid_argument("MmsCase: need >= 3 refinement levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 4) throw std::invalid_argument("MmsCase: levels must be >= 4");
        if (i > 0 && levels[i] <= levels[i - 1])
            throw std::invalid_argument("MmsCase: levels must increase");
    }
    if (!(tau_ref > 0.0) || !(t_end > 0.0))
        throw std::invalid_argument("MmsCase: tau_ref and t_end must be > 0");
    Expression::parse(exact_rho);
    Expression::parse(exact_c);
    Expression::parse(forcing_rho);
    Expression::parse(forcing_c);
}

ConvergenceTable run_convergence(const MmsCase& mms) {
    mms.validate();
    const Expression exact_rho = Expression::parse(mms.exact_rho);
    const Expression exact_c = Expression::parse(mms.exact_c);

    ConvergenceTable table;
    const double n0 = static_cast<double>(mms.levels.front());

    for (std::size_t lev = 0; lev < mms.levels.size(); ++lev) {
        const int cells = mms.levels[lev];
        GridPtr grid = build_grid(mms.region, {cells});

        StepperConfig cfg = mms.stepper;
        const double scale = n0 / static_cast<double>(cells);
        cfg.tau = mms.tau_ref * scale * scale;  // tau proportional to h^2
        cfg.tau_min = std::min(cfg.tau_min, cfg.tau);
        cfg.tau_max = std::max(cfg.tau_max, cfg.tau);
        cfg.adapt = false;

        State init;
        init.rho = evaluate_on_grid(exact_rho, grid, 0.0);
        init.c = evaluate_on_grid(exact_c, grid, 0.0);
        init.t = 0.0;

        RunOptions opts;
        opts.t_end = mms.t_end;
        opts.forcing.rho = Expression::parse(mms.forcing_rho);
        opts.forcing.c = Expression::parse(mms.forcing_c);

        Trajectory traj = run(init, mms.params, cfg, opts);
        if (traj.status != RunStatus::completed)
            throw std::runtime_error("run_convergence: level " + std::to_string(cells) +
                                     " ended with " + to_string(traj.status));

        Field exact_end = evaluate_on_grid(exact_rho, grid, traj.final_state.t);
        Field diff(grid);
        for (int i = 0; i < diff.size(); ++i) diff[i] = traj.final_state.rho[i] - exact_end[i];

        ConvergenceRow row;
        row.cells = cells;
        row.h = grid->spacing()[0];
        row.tau = cfg.tau;
        row.error_l2 = lp_norm(diff, 2.0);
        if (lev > 0) {
            const ConvergenceRow& prev = table.rows.back();
            const double ratio = std::log2(static_cast<double>(cells) / prev.cells);
            row.order = std::log2(prev.error_l2 / row.error_l2) / ratio;
            if (row.order < 0.5) table.suspected_inconsistency = true;
        }
        table.rows.push_back(row);
    }
    return table;
}

MmsCase parse_mms_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open case file: " + path);
    ini::Sections sections = ini::read_sections(in);
    ini::Reader r(sections);

    MmsCase c;
    r.get("model", "m", c.params.m);
    r.get("model", "n", c.params.n);
    r.get("model", "delta", c.params.delta);
    r.get("model", "alpha", c.params.alpha);
    r.get("model", "dim", c.params.dim);

    c.region.dim = c.params.dim;
    r.get_axes("region", "lo", c.region.lo, c.region.dim);
    r.get_axes("region", "hi", c.region.hi, c.region.dim);

    r.get("mms", "exact_rho", c.exact_rho);
    r.get("mms", "exact_c", c.exact_c);
    r.get("mms", "forcing_rho", c.forcing_rho);
    r.get("mms", "forcing_c", c.forcing_c);
    r.get("mms", "levels", c.levels);
    r.get("mms", "tau_ref", c.tau_ref);
    r.get("mms", "t_end", c.t_end);

    r.get("stepper", "newton_tol", c.stepper.newton_tol);
    r.get("stepper", "newton_max_iter", c.stepper.newton_max_iter);
    r.get("stepper", "linear_tol", c.stepper.linear_tol);
    r.get("stepper", "linear_max_iter", c.stepper.linear_max_iter);
    r.get("stepper", "fd_floor", c.stepper.fd_floor);

    r.reject_unused();
    c.validate();
    return c;
}

void write_convergence_csv(const std::string& path, const ConvergenceTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "cells,h,tau,error_l2,order\n";
    for (const auto& row : table.rows)
        out << row.cells << "," << format_double(row.h) << "," << format_double(row.tau) << ","
            << format_double(row.error_l2) << "," << format_double(row.order) << "\n";
}

}  // namespace ksfv
