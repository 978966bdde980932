#pragma once
// Compressed-sparse-row matrices and the two Krylov solvers the steppers
// need: conjugate gradients for the SPD systems (no-flux Helmholtz, i.e.
// -Lap + I) and BiCGSTAB for the nonsymmetric Newton systems. Both use a
// symmetric Gauss-Seidel sweep as preconditioner (Jacobi available as a
// fallback); convergence is ||r||_2 <= tol * ||b||_2.

#include <vector>

namespace ksfv {

struct CsrMatrix {
    int n = 0;
    std::vector<int> rowptr;   // size n+1
    std::vector<int> cols;     // column indices, ascending within a row
    std::vector<double> vals;

    void mul(const double* x, double* y) const;
};

enum class Precond { none, jacobi, ssor, ilu0 };

struct KrylovReport {
    bool converged = false;
    int iterations = 0;
    double rel_residual = 0.0;
};

KrylovReport solve_cg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                      double tol, int max_iter, Precond pc = Precond::ssor);

KrylovReport solve_bicgstab(const CsrMatrix& a, const std::vector<double>& b,
                            std::vector<double>& x, double tol, int max_iter,
                            Precond pc = Precond::ssor);

}  // namespace ksfv
