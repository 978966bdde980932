#include "ksfv/model.hpp"

#include <algorithm>
#include <cmath>

namespace ksfv {

namespace {

// Exact sign evaluation for short sums of products of doubles using
// error-free transformations (two_sum / fma-based two_prod, expansion
// accumulation). Every double is an exact binary rational, so the sign
// computed this way is the sign of the exact rational expression.

inline void two_sum(double a, double b, double& hi, double& lo) {
    hi = a + b;
    double bv = hi - a;
    lo = (a - (hi - bv)) + (b - bv);
}

inline void two_prod(double a, double b, double& hi, double& lo) {
    hi = a * b;
    lo = std::fma(a, b, -hi);
}

// Grows the expansion (nonoverlapping, increasing magnitude) by one term.
void grow_expansion(std::vector<double>& e, double b) {
    double q = b;
    std::size_t out = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double hi, lo;
        two_sum(q, e[i], hi, lo);
        if (lo != 0.0) e[out++] = lo;
        q = hi;
    }
    e.resize(out);
    if (q != 0.0) e.push_back(q);
}

// Sign of the exact value of sum(terms[i].first * terms[i].second).
int exact_sign(std::initializer_list<std::pair<double, double>> terms) {
    std::vector<double> e;
    for (const auto& [a, b] : terms) {
        double hi, lo;
        two_prod(a, b, hi, lo);
        if (lo != 0.0) grow_expansion(e, lo);
        if (hi != 0.0) grow_expansion(e, hi);
    }
    if (e.empty()) return 0;
    double head = e.back();  // largest-magnitude component carries the sign
    return head > 0.0 ? 1 : -1;
}

}  // namespace

void ModelParams::validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("ModelParams: m must be > 0");
    if (!(n > 1.0)) throw std::invalid_argument("ModelParams: n must be > 1");
    if (!(delta >= 0.0)) throw std::invalid_argument("ModelParams: delta must be >= 0");
    if (alpha != 0 && alpha != 1) throw std::invalid_argument("ModelParams: alpha must be 0 or 1");
    if (dim < 1 || dim > 3) throw std::invalid_argument("ModelParams: dim must be 1, 2 or 3");
}

DerivedExponents derived_exponents(const ModelParams& params) {
    params.validate();
    const double m = params.m, n = params.n, d = params.dim;
    DerivedExponents e;
    e.p = (m + n - 1.0) / 2.0;
    e.Q = n / d + e.p;
    e.s1 = 2.0 * e.Q / (e.Q + m - e.p);
    e.s2 = 2.0 * e.Q / (e.Q + n - e.p);
    e.s3 = 2.0 * e.Q / (e.Q + 1.0);
    return e;
}

AdmissibilityReport check_admissibility(const ModelParams& params) {
    params.validate();
    const double m = params.m, n = params.n;
    const double d = static_cast<double>(params.dim);

    AdmissibilityReport report;
    auto add = [&](std::string name, bool sat, double lhs, double rhs) {
        report.checks.push_back({std::move(name), sat, lhs, rhs});
    };

    // m > 0 and n > 1 hold by the type invariant but are part of the
    // printed conjunction, so they are listed with the rest.
    add("m > 0", m > 0.0, m, 0.0);
    add("n > 1", n > 1.0, n, 1.0);
    // n - (m - 1) >= 0, exact
    add("n >= m-1", exact_sign({{n, 1.0}, {m, -1.0}, {1.0, 1.0}}) >= 0, n, m - 1.0);
    // (m + 1) - n >= 0, exact
    add("n <= m+1", exact_sign({{m, 1.0}, {1.0, 1.0}, {n, -1.0}}) >= 0, n, m + 1.0);
    // d*m + d*n + 2n - 3d > 0 (the condition multiplied by d), exact
    add("m+n+(2/d)n > 3",
        exact_sign({{d, m}, {d, n}, {2.0, n}, {-3.0, d}}) > 0,
        m + n + 2.0 * n / d, 3.0);

    report.admissible = std::all_of(report.checks.begin(), report.checks.end(),
                                    [](const AdmissibilityCheck& c) { return c.satisfied; });
    return report;
}

bool admissible_via_exponents(const ModelParams& params) {
    params.validate();
    const double m = params.m, n = params.n;
    const double d = static_cast<double>(params.dim);
    // 2p = m + n - 1. All three conditions scaled to polynomial form:
    //   1 - n/d < p    <=>  d*(m+n-1) - 2d + 2n > 0
    //   p <= m         <=>  2m - (m+n-1) >= 0
    //   p <= n         <=>  2n - (m+n-1) >= 0
    bool lower = exact_sign({{d, m}, {d, n}, {d, -1.0}, {-2.0, d}, {2.0, n}}) > 0;
    bool le_m = exact_sign({{2.0, m}, {m, -1.0}, {n, -1.0}, {1.0, 1.0}}) >= 0;
    bool le_n = exact_sign({{2.0, n}, {m, -1.0}, {n, -1.0}, {1.0, 1.0}}) >= 0;
    return lower && le_m && le_n;
}

EntropyVars entropy_variables(double rho, double c, const ModelParams& params) {
    params.validate();
    if (rho < 0.0) throw std::domain_error("entropy_variables: rho must be >= 0");
    if (params.delta <= 0.0)
        throw std::domain_error("entropy_variables: b = c/delta undefined for delta = 0");
    EntropyVars v;
    v.r = params.n / (params.n - 1.0) * std::pow(rho, params.n - 1.0);
    v.b = c / params.delta;
    return v;
}

Mat2 diffusion_matrix(double rho, const ModelParams& params) {
    params.validate();
    if (rho < 0.0) throw std::domain_error("diffusion_matrix: rho must be >= 0");
    const double expo = params.m - params.n + 1.0;
    if (rho == 0.0 && expo < 0.0)
        throw std::domain_error("diffusion_matrix: singular mobility at rho = 0 for m-n+1 < 0");
    Mat2 a;
    a.a11 = params.m / params.n * std::pow(rho, expo);
    a.a12 = -params.delta * rho;
    a.a21 = params.delta * rho;
    a.a22 = params.delta;
    return a;
}

GnTheta gn_theta(double p, double q, int dim) {
    const double d = static_cast<double>(dim);
    const double den = 1.0 - d / 2.0 + d * p;
    if (den == 0.0) throw std::domain_error("gn_theta: zero denominator 1 - d/2 + d p");
    GnTheta g;
    g.theta = d * p * (1.0 - 1.0 / q) / den;
    g.usable = g.theta > 0.0 && g.theta < p && p <= 1.0;
    return g;
}

double decay_rate_kappa(double delta, double poincare_const) {
    if (!(delta > 0.0) || !(poincare_const > 0.0))
        throw std::domain_error("decay_rate_kappa: delta and C_P must be > 0");
    const double cp2 = poincare_const * poincare_const;
    if (!(delta > cp2 / 4.0))
        throw std::domain_error("decay_rate_kappa: hypothesis delta > C_P^2/4 violated");
    return std::min(1.0, 4.0 * delta - cp2) / (4.0 * delta);
}

SteadyState homogeneous_steady_state(double mass, double domain_volume) {
    if (!(domain_volume > 0.0))
        throw std::invalid_argument("homogeneous_steady_state: volume must be > 0");
    if (mass < 0.0) throw std::invalid_argument("homogeneous_steady_state: mass must be >= 0");
    const double v = mass / domain_volume;
    return {v, v};
}

}  // namespace ksfv
