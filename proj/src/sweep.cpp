#include "ksfv/sweep.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "ksfv/diagnostics.hpp"
#include "ksfv/io.hpp"
#include "ksfv/model.hpp"

namespace ksfv {

namespace {

RunConfig with_value(const RunConfig& base, const std::string& parameter, double value) {
    RunConfig c = base;
    if (parameter == "m") c.model.m = value;
    else if (parameter == "n") c.model.n = value;
    else if (parameter == "delta") c.model.delta = value;
    else throw std::invalid_argument("run_sweep: parameter must be m, n or delta");
    return c;
}

SweepResult one_run(const RunConfig& cfg, double value, const std::string& parameter,
                    const std::string& out_root) {
    SweepResult res;
    res.value = value;
    try {
        cfg.validate();
        GridPtr grid = build_grid(cfg.region, cfg.resolution);
        State init;
        init.rho = evaluate_expression(cfg.initial_rho, grid);
        init.c = evaluate_expression(cfg.initial_c, grid);
        init.t = 0.0;

        RunOptions opts;
        opts.t_end = cfg.t_end;
        if (!cfg.forcing_rho.empty()) opts.forcing.rho = Expression::parse(cfg.forcing_rho);
        if (!cfg.forcing_c.empty()) opts.forcing.c = Expression::parse(cfg.forcing_c);

        // decay runs carry the relative entropy so a rate can be fitted
        const bool decay_applicable =
            cfg.model.alpha == 0 && cfg.model.m == 1.0 && cfg.model.n == 2.0;
        if (decay_applicable)
            opts.steady = homogeneous_steady_state(integrate(init.rho), grid->domain_volume());

        Trajectory traj = run(init, cfg.model, cfg.stepper, opts);
        res.status = traj.status;
        res.t_final = traj.final_state.t;
        res.rho_max_final = traj.records.back().rho_max;

        if (decay_applicable && traj.status == RunStatus::completed) {
            // for n = 2 the relative entropy is ||rho - rho*||_L2^2, so the
            // fitted rate of its square root is the density decay rate
            std::vector<std::pair<double, double>> series;
            for (const auto& rec : traj.records)
                series.push_back({rec.t, std::sqrt(std::max(rec.relative_entropy, 0.0))});
            try {
                DecayFit fit = fit_decay_rate(series, 0.2 * cfg.t_end, cfg.t_end);
                res.fitted_decay_rate = fit.fitted_rate;
            } catch (const std::invalid_argument&) {
                // too few usable samples (already converged): leave unset
            }
        }

        if (!out_root.empty()) {
            std::string dir = out_root + "/" + parameter + "=" + format_double(value);
            std::filesystem::create_directories(dir);
            write_diagnostics_csv(dir + "/diagnostics.csv", traj.records);
        }
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
    }
    return res;
}

}  // namespace

std::vector<SweepResult> run_sweep(const SweepSpec& spec) {
    std::vector<SweepResult> results(spec.values.size());
    if (spec.values.empty()) return results;

    unsigned workers = spec.max_concurrency > 0
                           ? static_cast<unsigned>(spec.max_concurrency)
                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(spec.values.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= spec.values.size()) return;
            results[i] = one_run(with_value(spec.base, spec.parameter, spec.values[i]),
                                 spec.values[i], spec.parameter, spec.out_root);
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

void write_sweep_csv(const std::string& path, const std::string& parameter,
                     const std::vector<SweepResult>& results) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << parameter << ",status,t_final,rho_max_final,fitted_decay_rate,error\n";
    for (const auto& r : results) {
        out << format_double(r.value) << ",";
        out << (r.failed ? "failed" : to_string(r.status)) << ",";
        out << format_double(r.t_final) << "," << format_double(r.rho_max_final) << ",";
        if (r.fitted_decay_rate) out << format_double(*r.fitted_decay_rate);
        out << "," << r.error << "\n";
    }
}

}  // namespace ksfv
