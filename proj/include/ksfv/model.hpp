#pragma once
// Parameter arithmetic for the chemotaxis system
//
//   d/dt rho = div(grad(rho^m) - rho grad c)
//   alpha d/dt c = Lap c + delta * Lap(rho^n) + rho - c
//
// with no-flux boundaries: the admissible exponent region, the derived
// integrability exponents, entropy variables, the mobility matrix of the
// entropy formulation, and the decay-rate / steady-state formulas.
//
// Everything here is a pure function on value types; the boundary
// classifications (n <= m+1 etc.) are evaluated with exact floating-point
// predicates so that rational inputs landing exactly on a boundary are
// never misclassified by rounding.

#include <stdexcept>
#include <string>
#include <vector>

namespace ksfv {

struct ModelParams {
    double m = 1.0;      // cell diffusion exponent, m > 0
    double n = 2.0;      // cross-diffusion exponent, n > 1
    double delta = 0.0;  // cross-diffusion strength, >= 0
    int alpha = 1;       // 1 = fully parabolic, 0 = parabolic-elliptic
    int dim = 1;         // spatial dimension, 1..3

    // Throws std::invalid_argument if any invariant is violated.
    void validate() const;

    bool operator==(const ModelParams&) const = default;
};

struct DerivedExponents {
    double p;   // (m + n - 1) / 2
    double Q;   // n/d + p
    double s1;  // 2Q / (Q + m - p)
    double s2;  // 2Q / (Q + n - p)
    double s3;  // 2Q / (Q + 1)
};

DerivedExponents derived_exponents(const ModelParams& params);

struct AdmissibilityCheck {
    std::string name;
    bool satisfied;
    double lhs;
    double rhs;
};

struct AdmissibilityReport {
    bool admissible = false;
    std::vector<AdmissibilityCheck> checks;
};

// Classifies (m, n, d) against the global-existence region
//   m > 0,  n > 1,  m-1 <= n <= m+1,  m + n + (2/d) n > 3.
// Boundary comparisons are exact.
AdmissibilityReport check_admissibility(const ModelParams& params);

// Equivalent classification in terms of p = (m+n-1)/2:
//   1 - n/d < p <= min(m, n).
// Provided as an independent route for cross-checking; also exact.
bool admissible_via_exponents(const ModelParams& params);

struct EntropyVars {
    double r;  // n/(n-1) * rho^(n-1)
    double b;  // c / delta
};

// Requires delta > 0 (b is undefined otherwise: throws std::domain_error).
EntropyVars entropy_variables(double rho, double c, const ModelParams& params);

struct Mat2 {
    double a11, a12, a21, a22;
};

// Mobility matrix of the entropy formulation,
//   [ (m/n) rho^(m-n+1)   -delta rho ]
//   [ delta rho            delta     ].
// Throws std::domain_error at rho = 0 when m-n+1 < 0 (singular mobility).
Mat2 diffusion_matrix(double rho, const ModelParams& params);

struct GnTheta {
    double theta;
    bool usable;  // 0 < theta < p <= 1
};

// Gagliardo-Nirenberg interpolation exponent
//   theta = d p (1 - 1/q) / (1 - d/2 + d p).
// Throws std::domain_error when the denominator vanishes.
GnTheta gn_theta(double p, double q, int dim);

// kappa = min{1, 4 delta - C_P^2} / (4 delta), valid for delta > C_P^2/4
// (throws std::domain_error otherwise).
double decay_rate_kappa(double delta, double poincare_const);

struct SteadyState {
    double rho_star;
    double c_star;
};

// rho* = c* = M / |Omega|.
SteadyState homogeneous_steady_state(double mass, double domain_volume);

}  // namespace ksfv
