#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ksfv/sparse.hpp"

using namespace ksfv;

namespace {

// 1D no-flux Helmholtz -Lap + I on n cells, h = 1/n.
CsrMatrix helmholtz_1d(int n) {
    const double w = static_cast<double>(n) * n;
    CsrMatrix a;
    a.n = n;
    a.rowptr.push_back(0);
    for (int i = 0; i < n; ++i) {
        double diag = 1.0;
        if (i > 0) {
            a.cols.push_back(i - 1);
            a.vals.push_back(-w);
            diag += w;
        }
        int diag_pos = static_cast<int>(a.cols.size());
        a.cols.push_back(i);
        a.vals.push_back(0.0);
        if (i + 1 < n) {
            a.cols.push_back(i + 1);
            a.vals.push_back(-w);
            diag += w;
        }
        a.vals[static_cast<std::size_t>(diag_pos)] = diag;
        a.rowptr.push_back(static_cast<int>(a.cols.size()));
    }
    return a;
}

double residual_norm(const CsrMatrix& a, const std::vector<double>& b,
                     const std::vector<double>& x) {
    std::vector<double> ax(b.size());
    a.mul(x.data(), ax.data());
    double s = 0.0, bs = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double r = b[i] - ax[i];
        s += r * r;
        bs += b[i] * b[i];
    }
    return std::sqrt(s) / std::sqrt(bs);
}

}  // namespace

TEST_CASE("cg solves the no-flux helmholtz system") {
    const int n = 300;
    CsrMatrix a = helmholtz_1d(n);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> b(n), x(n, 0.0);
    for (double& v : b) v = u(rng);

    for (Precond pc : {Precond::none, Precond::jacobi, Precond::ssor, Precond::ilu0}) {
        std::fill(x.begin(), x.end(), 0.0);
        auto rep = solve_cg(a, b, x, 1e-11, 20000, pc);
        CHECK(rep.converged);
        CHECK(residual_norm(a, b, x) <= 2e-11);
    }

    // ssor should need far fewer iterations than unpreconditioned cg
    std::vector<double> x1(n, 0.0), x2(n, 0.0);
    auto plain = solve_cg(a, b, x1, 1e-10, 20000, Precond::none);
    auto ssor = solve_cg(a, b, x2, 1e-10, 20000, Precond::ssor);
    CHECK(ssor.iterations < plain.iterations);
}

TEST_CASE("cg: constant rhs has the constant solution") {
    CsrMatrix a = helmholtz_1d(64);
    std::vector<double> b(64, 3.5), x = b;  // warm start at the solution
    auto rep = solve_cg(a, b, x, 1e-12, 1000);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
    for (double v : x) CHECK(v == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("cg: zero rhs returns zero") {
    CsrMatrix a = helmholtz_1d(16);
    std::vector<double> b(16, 0.0), x(16, 7.0);
    auto rep = solve_cg(a, b, x, 1e-10, 100);
    CHECK(rep.converged);
    for (double v : x) CHECK(v == 0.0);
}

TEST_CASE("bicgstab solves a nonsymmetric drift-diffusion system") {
    // -Lap + I plus a skew drift part
    const int n = 200;
    CsrMatrix a = helmholtz_1d(n);
    const double drift = 35.0;
    for (int i = 0; i < n; ++i)
        for (int k = a.rowptr[static_cast<std::size_t>(i)];
             k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k) {
            int j = a.cols[static_cast<std::size_t>(k)];
            if (j == i + 1) a.vals[static_cast<std::size_t>(k)] += drift;
            if (j == i - 1) a.vals[static_cast<std::size_t>(k)] -= drift;
        }

    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> b(n), x(n, 0.0);
    for (double& v : b) v = u(rng);

    auto rep = solve_bicgstab(a, b, x, 1e-11, 20000);
    CHECK(rep.converged);
    CHECK(residual_norm(a, b, x) <= 5e-11);

    // ilu0 should beat ssor on the drift-dominated system
    std::vector<double> x2(n, 0.0);
    auto ilu = solve_bicgstab(a, b, x2, 1e-11, 20000, Precond::ilu0);
    CHECK(ilu.converged);
    CHECK(residual_norm(a, b, x2) <= 5e-11);
    CHECK(ilu.iterations <= rep.iterations);
}

TEST_CASE("solvers report non-convergence honestly") {
    CsrMatrix a = helmholtz_1d(400);
    std::vector<double> b(400, 0.0), x;
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : b) v = u(rng);
    auto rep = solve_cg(a, b, x, 1e-12, 3, Precond::none);  // far too few iterations
    CHECK_FALSE(rep.converged);
    CHECK(rep.rel_residual > 1e-12);
}
