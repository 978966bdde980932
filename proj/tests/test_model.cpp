#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ksfv/model.hpp"

using namespace ksfv;

namespace {

ModelParams params(double m, double n, int dim, double delta = 0.0, int alpha = 1) {
    ModelParams p;
    p.m = m;
    p.n = n;
    p.dim = dim;
    p.delta = delta;
    p.alpha = alpha;
    return p;
}

// Samples (m, n, d) from the bands around the admissible region.
struct ParamSampler {
    std::mt19937 rng{20240405};
    std::uniform_real_distribution<double> um{0.05, 3.0};
    std::uniform_real_distribution<double> un{1.0 + 1e-9, 4.0};
    std::uniform_int_distribution<int> ud{1, 3};

    ModelParams next() { return params(um(rng), un(rng), ud(rng)); }
};

}  // namespace

TEST_CASE("params validation") {
    CHECK_NOTHROW(params(1, 2, 3).validate());
    CHECK_THROWS_AS(params(0, 2, 3).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(1, 1, 3).validate(), std::invalid_argument);
    CHECK_THROWS_AS(params(1, 2, 4).validate(), std::invalid_argument);
    ModelParams bad = params(1, 2, 3);
    bad.delta = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = params(1, 2, 3);
    bad.alpha = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("derived exponents: m=1 n=2 d=3") {
    DerivedExponents e = derived_exponents(params(1, 2, 3));
    CHECK(e.p == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.Q == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(e.s1 == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(e.s2 == doctest::Approx(5.0 / 4.0).epsilon(1e-15));
    CHECK(e.s3 == doctest::Approx(5.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("derived exponents: limit n -> 1+ gives p -> 1/2 for m=1") {
    DerivedExponents e = derived_exponents(params(1.0, 1.0 + 1e-12, 2));
    CHECK(e.p == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("derived exponents: s1 == s2 when m == n") {
    ParamSampler gen;
    for (int k = 0; k < 200; ++k) {
        ModelParams p = gen.next();
        p.m = p.n;
        DerivedExponents e = derived_exponents(p);
        CHECK(e.s1 == doctest::Approx(e.s2).epsilon(1e-14));
    }
}

TEST_CASE("admissibility: printed families") {
    // d=3, m=1: admissible exactly for 6/5 < n <= 2
    CHECK(check_admissibility(params(1, 2, 3)).admissible);
    CHECK(check_admissibility(params(1, 1.5, 3)).admissible);
    CHECK_FALSE(check_admissibility(params(1, 1.1, 3)).admissible);
    CHECK_FALSE(check_admissibility(params(1, 1.2, 3)).admissible);  // boundary excluded
    CHECK_FALSE(check_admissibility(params(1, 2.001, 3)).admissible);
    // d=3 fast diffusion: 1/2 < m < 1, 3(3-m)/5 < n <= m+1
    CHECK(check_admissibility(params(0.8, 1.5, 3)).admissible);
    // the decimal literals 0.8 and 1.32 round to doubles whose exact sum
    // m + n + 2n/3 lies just above 3, so this boundary case is inside
    CHECK(check_admissibility(params(0.8, 1.32, 3)).admissible);
    CHECK_FALSE(check_admissibility(params(0.8, 1.3, 3)).admissible);
    CHECK(check_admissibility(params(0.8, 1.33, 3)).admissible);
    // d=2, m=1: any 1 < n <= 2
    CHECK(check_admissibility(params(1, 1.5, 2)).admissible);
    CHECK(check_admissibility(params(1, 2, 2)).admissible);
    CHECK_FALSE(check_admissibility(params(1, 2.2, 2)).admissible);
    // d=2 fast diffusion: 1/3 < m < 1, (3-m)/2 < n <= m+1
    CHECK(check_admissibility(params(0.5, 1.4, 2)).admissible);
    CHECK_FALSE(check_admissibility(params(0.5, 1.25, 2)).admissible);  // sum is exactly 3
    CHECK(check_admissibility(params(0.5, 1.5, 2)).admissible);         // n = m+1 included
    CHECK_FALSE(check_admissibility(params(0.5, 1.51, 2)).admissible);
}

TEST_CASE("admissibility: boundary cases are classified exactly") {
    // m + n + (2/d) n == 3 exactly in binary for these rationals
    CHECK_FALSE(check_admissibility(params(0.5, 1.25, 2)).admissible);
    CHECK_FALSE(check_admissibility(params(0.5, 1.5, 3)).admissible);
    CHECK_FALSE(check_admissibility(params(0.25, 1.375, 2)).admissible);
    // nudge by one ulp and the classification flips
    CHECK(check_admissibility(params(0.5, std::nextafter(1.25, 2.0), 2)).admissible);
    // n = m + 1 boundary is included (non-strict)
    CHECK(check_admissibility(params(0.75, 1.75, 2)).admissible);
    CHECK_FALSE(check_admissibility(params(0.75, std::nextafter(1.75, 2.0), 2)).admissible);
}

TEST_CASE("admissibility: report structure") {
    AdmissibilityReport rep = check_admissibility(params(1, 1.1, 3));
    CHECK(rep.checks.size() == 5);
    bool all = true;
    for (const auto& c : rep.checks) all = all && c.satisfied;
    CHECK(rep.admissible == all);
    CHECK_FALSE(rep.admissible);
    for (const auto& c : rep.checks)
        if (c.name == "m+n+(2/d)n > 3") {
            CHECK_FALSE(c.satisfied);
            CHECK(c.lhs == doctest::Approx(1 + 1.1 + 2 * 1.1 / 3.0));
        }
}

TEST_CASE("admissibility: conjunction form agrees with the exponent form") {
    ParamSampler gen;
    for (int k = 0; k < 20000; ++k) {
        ModelParams p = gen.next();
        CHECK(check_admissibility(p).admissible == admissible_via_exponents(p));
    }
    // dense rational sweep across the boundary lines
    for (int mi = 1; mi <= 48; ++mi)
        for (int ni = 17; ni <= 64; ++ni)
            for (int d = 1; d <= 3; ++d) {
                ModelParams p = params(mi / 16.0, ni / 16.0, d);
                CHECK(check_admissibility(p).admissible == admissible_via_exponents(p));
            }
}

TEST_CASE("derived exponent ranges on admissible parameters") {
    ParamSampler gen;
    int seen = 0;
    while (seen < 2000) {
        ModelParams p = gen.next();
        if (!check_admissibility(p).admissible) continue;
        ++seen;
        DerivedExponents e = derived_exponents(p);
        CHECK(e.Q > 1.0);
        CHECK(e.s1 > 1.0);
        CHECK(e.s1 <= 2.0 + 1e-14);
        CHECK(e.s2 > 1.0);
        CHECK(e.s2 <= 2.0 + 1e-14);
        CHECK(e.s3 > 1.0);
        CHECK(e.s3 < 2.0);
    }
}

TEST_CASE("entropy variables") {
    auto [r0, b0] = entropy_variables(0.0, 0.0, params(1, 2, 1, 1.0));
    CHECK(r0 == 0.0);
    CHECK(b0 == 0.0);

    auto [r1, b1] = entropy_variables(1.0, 0.7, params(1, 3, 1, 0.7));
    CHECK(r1 == doctest::Approx(1.5));  // n/(n-1) at rho = 1
    CHECK(b1 == doctest::Approx(1.0));  // c = delta

    auto [r2, b2] = entropy_variables(2.0, 1.0, params(1, 2, 1, 0.5));
    CHECK(r2 == doctest::Approx(4.0));
    CHECK(b2 == doctest::Approx(2.0));

    CHECK_THROWS_AS(entropy_variables(1.0, 1.0, params(1, 2, 1, 0.0)), std::domain_error);
}

TEST_CASE("entropy variable r is strictly monotone in rho") {
    ParamSampler gen;
    std::uniform_real_distribution<double> ur(1e-6, 50.0);
    for (int k = 0; k < 2000; ++k) {
        ModelParams p = gen.next();
        p.delta = 0.1;
        double a = ur(gen.rng), b = ur(gen.rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        CHECK(entropy_variables(a, 0, p).r < entropy_variables(b, 0, p).r);
    }
}

TEST_CASE("diffusion matrix") {
    // m = n: exponent m-n+1 = 1, so the mobility vanishes at rho = 0
    Mat2 a = diffusion_matrix(0.0, params(2, 2, 1, 0.3));
    CHECK(a.a11 == 0.0);
    CHECK(a.a12 == 0.0);
    CHECK(a.a21 == 0.0);
    CHECK(a.a22 == doctest::Approx(0.3));

    // n = m+1: exponent zero, rho^0 = 1 even at rho = 0, entry m/n
    Mat2 z = diffusion_matrix(0.0, params(1, 2, 1, 0.3));
    CHECK(z.a11 == doctest::Approx(0.5));

    Mat2 b = diffusion_matrix(1.0, params(1, 2, 1, 0.5));
    CHECK(b.a11 == doctest::Approx(0.5));
    CHECK(b.a12 == doctest::Approx(-0.5));
    CHECK(b.a21 == doctest::Approx(0.5));
    CHECK(b.a22 == doctest::Approx(0.5));

    // singular mobility: rho = 0 with m - n + 1 < 0
    CHECK_THROWS_AS(diffusion_matrix(0.0, params(0.5, 2, 1, 0.1)), std::domain_error);
    CHECK_NOTHROW(diffusion_matrix(1e-9, params(0.5, 2, 1, 0.1)));
}

TEST_CASE("diffusion matrix symmetric part is PSD for admissible parameters") {
    ParamSampler gen;
    std::uniform_real_distribution<double> ur(0.0, 100.0);
    std::uniform_real_distribution<double> ud(0.0, 2.0);
    int seen = 0;
    while (seen < 10000) {
        ModelParams p = gen.next();
        if (!check_admissibility(p).admissible) continue;  // implies m-n+1 >= 0
        p.delta = ud(gen.rng);
        ++seen;
        Mat2 a = diffusion_matrix(ur(gen.rng), p);
        const double off = 0.5 * (a.a12 + a.a21);
        CHECK(off == 0.0);  // cancels exactly
        CHECK(a.a11 >= 0.0);
        CHECK(a.a22 >= 0.0);
    }
}

TEST_CASE("gn_theta") {
    CHECK(gn_theta(1.0, 2.0, 2).theta == doctest::Approx(0.5));
    CHECK(gn_theta(1.0, 1.2, 3).theta == doctest::Approx(0.2));
    CHECK(gn_theta(0.7, 1.0, 3).theta == 0.0);  // q = 1 kills the factor
    // zero denominator: 1 - d/2 + d p = 0 at p = (d/2 - 1)/d
    CHECK_THROWS_AS(gn_theta((1.5 - 1.0) / 3.0, 2.0, 3), std::domain_error);
}

TEST_CASE("gn_theta usable range on the d=3 first branch") {
    // 1 - 2/d < p <= 1 with q = 2d/(d+2) = 6/5
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> up(1.0 / 3.0 + 1e-9, 1.0);
    for (int k = 0; k < 1000; ++k) {
        double p = up(rng);
        GnTheta g = gn_theta(p, 1.2, 3);
        CHECK(g.theta > 0.0);
        CHECK(g.theta < p);
        CHECK(g.usable);
    }
}

TEST_CASE("decay rate kappa") {
    CHECK(decay_rate_kappa(1.0, 1.0) == doctest::Approx(0.25));
    CHECK(decay_rate_kappa(10.0, 1.0) == doctest::Approx(1.0 / 40.0));
    CHECK_THROWS_AS(decay_rate_kappa(0.25, 1.0), std::domain_error);  // delta = C_P^2/4
    // just above the hypothesis boundary the rate is positive and small
    double eps = 1e-8;
    double k = decay_rate_kappa(0.25 + eps, 1.0);
    CHECK(k > 0.0);
    CHECK(k == doctest::Approx(4 * eps / (1.0 + 4 * eps)).epsilon(1e-6));
}

TEST_CASE("homogeneous steady state") {
    auto s0 = homogeneous_steady_state(0.0, 1.0);
    CHECK(s0.rho_star == 0.0);
    CHECK(s0.c_star == 0.0);
    auto s1 = homogeneous_steady_state(25.0 * 3.14159265358979323846 / 3.0,
                                       3.14159265358979323846);
    CHECK(s1.rho_star == doctest::Approx(25.0 / 3.0));
    auto s2 = homogeneous_steady_state(4.0, 4.0);
    CHECK(s2.rho_star == doctest::Approx(1.0));
    CHECK(s2.c_star == doctest::Approx(1.0));
    CHECK_THROWS_AS(homogeneous_steady_state(1.0, 0.0), std::invalid_argument);
}
