#include "ksfv/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "ksfv/io.hpp"
#include "section_reader.hpp"

namespace ksfv {

namespace {

ParsedConfig from_sections(ini::Sections& sections) {
    ParsedConfig out;
    ini::Reader r(sections);
    RunConfig& c = out.run;

    r.get("model", "m", c.model.m);
    r.get("model", "n", c.model.n);
    r.get("model", "delta", c.model.delta);
    r.get("model", "alpha", c.model.alpha);
    r.get("model", "dim", c.model.dim);

    c.region.dim = c.model.dim;
    std::string kind = c.region.kind == RegionSpec::Kind::ball ? "ball" : "box";
    r.get("region", "type", kind);
    if (kind == "box") c.region.kind = RegionSpec::Kind::box;
    else if (kind == "ball") c.region.kind = RegionSpec::Kind::ball;
    else throw ConfigError("region.type must be 'box' or 'ball' (got '" + kind + "')", 0);
    r.get_axes("region", "lo", c.region.lo, c.region.dim);
    r.get_axes("region", "hi", c.region.hi, c.region.dim);
    r.get_axes("region", "center", c.region.center, c.region.dim);
    r.get("region", "radius", c.region.radius);

    r.get("grid", "resolution", c.resolution);

    r.get("stepper", "tau", c.stepper.tau);
    r.get("stepper", "tau_min", c.stepper.tau_min);
    r.get("stepper", "tau_max", c.stepper.tau_max);
    r.get("stepper", "newton_tol", c.stepper.newton_tol);
    r.get("stepper", "newton_max_iter", c.stepper.newton_max_iter);
    r.get("stepper", "linear_tol", c.stepper.linear_tol);
    r.get("stepper", "linear_max_iter", c.stepper.linear_max_iter);
    r.get("stepper", "fd_floor", c.stepper.fd_floor);
    r.get("stepper", "adapt", c.stepper.adapt);
    r.get("stepper", "growth", c.stepper.growth);
    r.get("stepper", "shrink", c.stepper.shrink);
    r.get("stepper", "cheap_newton_iters", c.stepper.cheap_newton_iters);
    r.get("stepper", "cheap_accepts_before_growth", c.stepper.cheap_accepts_before_growth);
    r.get("stepper", "rho_max_cap", c.stepper.rho_max_cap);
    r.get("stepper", "blowup_growth_factor", c.stepper.blowup_growth_factor);
    r.get("stepper", "blowup_window", c.stepper.blowup_window);

    r.get("run", "t_end", c.t_end);
    r.get("run", "initial_rho", c.initial_rho);
    r.get("run", "initial_c", c.initial_c);
    r.get("run", "forcing_rho", c.forcing_rho);
    r.get("run", "forcing_c", c.forcing_c);
    r.get("run", "snapshot_times", c.snapshot_times);
    r.get("run", "seed", c.seed);

    r.get("output", "dir", c.output_dir);

    r.get("decay", "cp", out.decay.poincare_const);
    r.get("decay", "fit_t_start", out.decay.fit_t_start);
    r.get("decay", "fit_t_end", out.decay.fit_t_end);

    r.reject_unused();
    return out;
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    region.validate();
    if (region.dim != model.dim)
        throw std::invalid_argument("RunConfig: region.dim must equal model.dim");
    if (resolution.empty() ||
        (resolution.size() != 1 && static_cast<int>(resolution.size()) != model.dim))
        throw std::invalid_argument("RunConfig: resolution needs 1 or dim entries");
    stepper.validate();
    if (!(t_end > 0.0)) throw std::invalid_argument("RunConfig: t_end must be > 0");
    Expression::parse(initial_rho);
    Expression::parse(initial_c);
    if (!forcing_rho.empty()) Expression::parse(forcing_rho);
    if (!forcing_c.empty()) Expression::parse(forcing_c);
    for (double s : snapshot_times)
        if (s < 0.0 || s > t_end)
            throw std::invalid_argument("RunConfig: snapshot times must lie in [0, t_end]");
}

ParsedConfig parse_run_config(std::istream& in) {
    ini::Sections sections = ini::read_sections(in);
    return from_sections(sections);
}

ParsedConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_run_config(in);
}

void write_run_config(std::ostream& out, const RunConfig& c, const DecayConfig* decay) {
    auto d = [](double v) { return format_double(v); };
    out << "[model]\n";
    out << "m = " << d(c.model.m) << "\n";
    out << "n = " << d(c.model.n) << "\n";
    out << "delta = " << d(c.model.delta) << "\n";
    out << "alpha = " << c.model.alpha << "\n";
    out << "dim = " << c.model.dim << "\n\n";

    out << "[region]\n";
    if (c.region.kind == RegionSpec::Kind::box) {
        out << "type = box\n";
        out << "lo = ";
        for (int a = 0; a < c.region.dim; ++a)
            out << (a ? ", " : "") << d(c.region.lo[static_cast<std::size_t>(a)]);
        out << "\nhi = ";
        for (int a = 0; a < c.region.dim; ++a)
            out << (a ? ", " : "") << d(c.region.hi[static_cast<std::size_t>(a)]);
        out << "\n\n";
    } else {
        out << "type = ball\n";
        out << "center = ";
        for (int a = 0; a < c.region.dim; ++a)
            out << (a ? ", " : "") << d(c.region.center[static_cast<std::size_t>(a)]);
        out << "\nradius = " << d(c.region.radius) << "\n\n";
    }

    out << "[grid]\n";
    out << "resolution = ";
    for (std::size_t a = 0; a < c.resolution.size(); ++a)
        out << (a ? ", " : "") << c.resolution[a];
    out << "\n\n";

    out << "[stepper]\n";
    out << "tau = " << d(c.stepper.tau) << "\n";
    out << "tau_min = " << d(c.stepper.tau_min) << "\n";
    out << "tau_max = " << d(c.stepper.tau_max) << "\n";
    out << "newton_tol = " << d(c.stepper.newton_tol) << "\n";
    out << "newton_max_iter = " << c.stepper.newton_max_iter << "\n";
    out << "linear_tol = " << d(c.stepper.linear_tol) << "\n";
    out << "linear_max_iter = " << c.stepper.linear_max_iter << "\n";
    out << "fd_floor = " << d(c.stepper.fd_floor) << "\n";
    out << "adapt = " << (c.stepper.adapt ? "true" : "false") << "\n";
    out << "growth = " << d(c.stepper.growth) << "\n";
    out << "shrink = " << d(c.stepper.shrink) << "\n";
    out << "cheap_newton_iters = " << c.stepper.cheap_newton_iters << "\n";
    out << "cheap_accepts_before_growth = " << c.stepper.cheap_accepts_before_growth << "\n";
    out << "rho_max_cap = " << d(c.stepper.rho_max_cap) << "\n";
    out << "blowup_growth_factor = " << d(c.stepper.blowup_growth_factor) << "\n";
    out << "blowup_window = " << c.stepper.blowup_window << "\n\n";

    out << "[run]\n";
    out << "t_end = " << d(c.t_end) << "\n";
    out << "initial_rho = " << c.initial_rho << "\n";
    out << "initial_c = " << c.initial_c << "\n";
    if (!c.forcing_rho.empty()) out << "forcing_rho = " << c.forcing_rho << "\n";
    if (!c.forcing_c.empty()) out << "forcing_c = " << c.forcing_c << "\n";
    if (!c.snapshot_times.empty()) {
        out << "snapshot_times = ";
        for (std::size_t a = 0; a < c.snapshot_times.size(); ++a)
            out << (a ? ", " : "") << d(c.snapshot_times[a]);
        out << "\n";
    }
    out << "seed = " << c.seed << "\n\n";

    out << "[output]\n";
    out << "dir = " << c.output_dir << "\n";

    if (decay) {
        out << "\n[decay]\n";
        out << "cp = " << d(decay->poincare_const) << "\n";
        out << "fit_t_start = " << d(decay->fit_t_start) << "\n";
        out << "fit_t_end = " << d(decay->fit_t_end) << "\n";
    }
}

std::string run_config_to_string(const RunConfig& cfg, const DecayConfig* decay) {
    std::ostringstream out;
    write_run_config(out, cfg, decay);
    return out.str();
}

void apply_env_overrides(ParsedConfig& cfg) {
    std::string text = run_config_to_string(cfg.run, &cfg.decay);
    std::istringstream in(text);
    ini::Sections sections = ini::read_sections(in);

    auto upper = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        return s;
    };

    bool changed = false;
    for (auto& [sec, keys] : sections)
        for (auto& [key, kv] : keys) {
            std::string var = "KSFV_" + upper(sec) + "_" + upper(key);
            if (const char* v = std::getenv(var.c_str())) {
                kv.value = v;
                changed = true;
            }
        }
    // Optional keys absent from the rendering are still overridable.
    static const std::pair<const char*, const char*> extra[] = {
        {"run", "forcing_rho"}, {"run", "forcing_c"}, {"run", "snapshot_times"},
        {"region", "lo"},       {"region", "hi"},     {"region", "center"},
        {"region", "radius"},
    };
    for (const auto& [sec, key] : extra) {
        std::string var = "KSFV_" + upper(sec) + "_" + upper(key);
        if (const char* v = std::getenv(var.c_str())) {
            sections[sec][key] = {v, 0, false};
            changed = true;
        }
    }
    if (changed) cfg = from_sections(sections);
}

}  // namespace ksfv
