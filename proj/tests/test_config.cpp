#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "ksfv/config.hpp"
#include "ksfv/presets.hpp"

using namespace ksfv;

TEST_CASE("config round trip is exact") {
    for (const auto& name : preset_names()) {
        ParsedConfig original = *preset(name);
        std::string text = run_config_to_string(original.run, &original.decay);
        std::istringstream in(text);
        ParsedConfig reparsed = parse_run_config(in);
        CAPTURE(name);
        CHECK(reparsed.run == original.run);
        CHECK(reparsed.decay == original.decay);
        // a second round trip renders identical text
        CHECK(run_config_to_string(reparsed.run, &reparsed.decay) == text);
    }
}

TEST_CASE("parse errors carry line numbers") {
    {
        std::istringstream in("[model\nm = 1\n");
        CHECK_THROWS_AS(parse_run_config(in), ConfigError);
    }
    {
        std::istringstream in("[model]\nm 1\n");
        try {
            parse_run_config(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line() == 2);
        }
    }
    {
        std::istringstream in("[model]\nm = fast\n");
        try {
            parse_run_config(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.line() == 2);
            CHECK(std::string(e.what()).find("malformed number") != std::string::npos);
        }
    }
    {
        std::istringstream in("m = 1\n");
        CHECK_THROWS_AS(parse_run_config(in), ConfigError);  // key outside a section
    }
    {
        std::istringstream in("[model]\nmm = 1\n");
        try {
            parse_run_config(in);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
        }
    }
}

TEST_CASE("comments, blank lines and case-insensitive keys") {
    std::istringstream in(
        "# a comment\n"
        "[Model]\n"
        "M = 0.5\n"
        "N = 1.5\n"
        "\n"
        "; another comment\n"
        "[run]\n"
        "t_end = 2.0\n");
    ParsedConfig cfg = parse_run_config(in);
    CHECK(cfg.run.model.m == 0.5);
    CHECK(cfg.run.model.n == 1.5);
    CHECK(cfg.run.t_end == 2.0);
}

TEST_CASE("validate catches cross-field problems") {
    RunConfig c = preset("decay1d")->run;
    CHECK_NOTHROW(c.validate());

    RunConfig bad = c;
    bad.initial_rho = "1 +";
    CHECK_THROWS(bad.validate());

    bad = c;
    bad.snapshot_times = {c.t_end + 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = c;
    bad.t_end = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = c;
    bad.resolution = {32, 32};  // 2 entries for a 1d model
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("environment overrides any key") {
    ParsedConfig cfg = *preset("decay1d");
    CHECK(cfg.run.model.delta == 1.0);

    setenv("KSFV_MODEL_DELTA", "0.75", 1);
    setenv("KSFV_STEPPER_TAU_MAX", "0.5", 1);
    setenv("KSFV_RUN_SNAPSHOT_TIMES", "1.0, 2.0", 1);
    apply_env_overrides(cfg);
    unsetenv("KSFV_MODEL_DELTA");
    unsetenv("KSFV_STEPPER_TAU_MAX");
    unsetenv("KSFV_RUN_SNAPSHOT_TIMES");

    CHECK(cfg.run.model.delta == 0.75);
    CHECK(cfg.run.stepper.tau_max == 0.5);
    REQUIRE(cfg.run.snapshot_times.size() == 2);
    CHECK(cfg.run.snapshot_times[0] == 1.0);
    CHECK(cfg.run.snapshot_times[1] == 2.0);
    // untouched keys survive
    CHECK(cfg.run.model.m == 1.0);
    CHECK(cfg.decay.poincare_const == doctest::Approx(1.0 / 3.14159265358979323846));
}

TEST_CASE("presets are valid and the section list is stable") {
    for (const auto& name : preset_names()) {
        auto p = preset(name);
        REQUIRE(p.has_value());
        CHECK_NOTHROW(p->run.validate());
    }
    CHECK_FALSE(preset("no-such-preset").has_value());

    // aggregation presets embed the printed initial data verbatim
    CHECK(preset("ks2d-fast-blowup")->run.initial_rho == "80*(x^2+y^2-1)^2*(x-0.1)^2+5");
    CHECK(preset("ks2d-fast-blowup")->run.initial_c == "0");
    CHECK(preset("ks3d-cross")->run.initial_rho == "10+80*(x^2+y^2+z^2-1)^2*(x-0.4)^2");
    CHECK(preset("ks2d-fast-blowup")->run.model.delta == 0.0);
    CHECK(preset("ks2d-fast-cross")->run.model.delta == 0.005);
    CHECK(preset("ks2d-fast-blowup")->run.stepper.fd_floor == 0.005);
}
