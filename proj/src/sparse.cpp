#include "ksfv/sparse.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace ksfv {

void CsrMatrix::mul(const double* x, double* y) const {
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = rowptr[static_cast<std::size_t>(i)];
             k < rowptr[static_cast<std::size_t>(i) + 1]; ++k)
            acc += vals[static_cast<std::size_t>(k)] * x[cols[static_cast<std::size_t>(k)]];
        y[i] = acc;
    }
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

class Preconditioner {
public:
    Preconditioner(const CsrMatrix& a, Precond kind) : a_(a), kind_(kind) {
        if (kind_ == Precond::none) return;
        diag_.assign(static_cast<std::size_t>(a.n), 1.0);
        for (int i = 0; i < a.n; ++i)
            for (int k = a.rowptr[static_cast<std::size_t>(i)];
                 k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k)
                if (a.cols[static_cast<std::size_t>(k)] == i) {
                    double d = a.vals[static_cast<std::size_t>(k)];
                    diag_[static_cast<std::size_t>(i)] = d != 0.0 ? d : 1.0;
                }
        if (kind_ == Precond::ilu0) factor_ilu0();
    }

    // z = M^{-1} r
    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        const std::size_t n = r.size();
        switch (kind_) {
            case Precond::none:
                z = r;
                return;
            case Precond::jacobi:
                for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag_[i];
                return;
            case Precond::ilu0: {
                // forward solve L z = r (unit lower), backward U z = z
                for (int i = 0; i < a_.n; ++i) {
                    double acc = r[static_cast<std::size_t>(i)];
                    for (int k = a_.rowptr[static_cast<std::size_t>(i)];
                         k < a_.rowptr[static_cast<std::size_t>(i) + 1]; ++k) {
                        int j = a_.cols[static_cast<std::size_t>(k)];
                        if (j >= i) break;
                        acc -= lu_[static_cast<std::size_t>(k)] *
                               z[static_cast<std::size_t>(j)];
                    }
                    z[static_cast<std::size_t>(i)] = acc;
                }
                for (int i = a_.n - 1; i >= 0; --i) {
                    double acc = z[static_cast<std::size_t>(i)];
                    double dv = 1.0;
                    for (int k = a_.rowptr[static_cast<std::size_t>(i) + 1] - 1;
                         k >= a_.rowptr[static_cast<std::size_t>(i)]; --k) {
                        int j = a_.cols[static_cast<std::size_t>(k)];
                        if (j < i) break;
                        if (j == i) {
                            dv = lu_[static_cast<std::size_t>(k)];
                            break;
                        }
                        acc -= lu_[static_cast<std::size_t>(k)] *
                               z[static_cast<std::size_t>(j)];
                    }
                    z[static_cast<std::size_t>(i)] = acc / dv;
                }
                return;
            }
            case Precond::ssor: {
                // forward solve (D + L) z = r, then z <- D z, then
                // backward solve (D + U) z = z  — symmetric Gauss-Seidel
                for (int i = 0; i < a_.n; ++i) {
                    double acc = r[static_cast<std::size_t>(i)];
                    for (int k = a_.rowptr[static_cast<std::size_t>(i)];
                         k < a_.rowptr[static_cast<std::size_t>(i) + 1]; ++k) {
                        int j = a_.cols[static_cast<std::size_t>(k)];
                        if (j < i) acc -= a_.vals[static_cast<std::size_t>(k)] *
                                          z[static_cast<std::size_t>(j)];
                    }
                    z[static_cast<std::size_t>(i)] = acc / diag_[static_cast<std::size_t>(i)];
                }
                for (std::size_t i = 0; i < n; ++i) z[i] *= diag_[i];
                for (int i = a_.n - 1; i >= 0; --i) {
                    double acc = z[static_cast<std::size_t>(i)];
                    for (int k = a_.rowptr[static_cast<std::size_t>(i)];
                         k < a_.rowptr[static_cast<std::size_t>(i) + 1]; ++k) {
                        int j = a_.cols[static_cast<std::size_t>(k)];
                        if (j > i) acc -= a_.vals[static_cast<std::size_t>(k)] *
                                          z[static_cast<std::size_t>(j)];
                    }
                    z[static_cast<std::size_t>(i)] = acc / diag_[static_cast<std::size_t>(i)];
                }
                return;
            }
        }
    }

private:
    const CsrMatrix& a_;
    Precond kind_;
    std::vector<double> diag_;
    std::vector<double> lu_;

    // standard IKJ ILU(0) on the CSR pattern (columns sorted per row)
    void factor_ilu0() {
        lu_ = a_.vals;
        std::vector<int> diag_pos(static_cast<std::size_t>(a_.n), -1);
        std::vector<int> col_pos(static_cast<std::size_t>(a_.n), -1);
        for (int i = 0; i < a_.n; ++i)
            for (int k = a_.rowptr[static_cast<std::size_t>(i)];
                 k < a_.rowptr[static_cast<std::size_t>(i) + 1]; ++k)
                if (a_.cols[static_cast<std::size_t>(k)] == i)
                    diag_pos[static_cast<std::size_t>(i)] = k;

        for (int i = 0; i < a_.n; ++i) {
            const int row_begin = a_.rowptr[static_cast<std::size_t>(i)];
            const int row_end = a_.rowptr[static_cast<std::size_t>(i) + 1];
            for (int k = row_begin; k < row_end; ++k)
                col_pos[static_cast<std::size_t>(a_.cols[static_cast<std::size_t>(k)])] = k;

            for (int k = row_begin; k < row_end; ++k) {
                const int j = a_.cols[static_cast<std::size_t>(k)];
                if (j >= i) break;
                const int dj = diag_pos[static_cast<std::size_t>(j)];
                double piv = dj >= 0 ? lu_[static_cast<std::size_t>(dj)] : 0.0;
                if (piv == 0.0) piv = 1e-300;
                const double factor = lu_[static_cast<std::size_t>(k)] / piv;
                lu_[static_cast<std::size_t>(k)] = factor;
                for (int q = dj + 1; q < a_.rowptr[static_cast<std::size_t>(j) + 1]; ++q) {
                    const int col = a_.cols[static_cast<std::size_t>(q)];
                    const int pos = col_pos[static_cast<std::size_t>(col)];
                    if (pos >= 0)
                        lu_[static_cast<std::size_t>(pos)] -=
                            factor * lu_[static_cast<std::size_t>(q)];
                }
            }

            for (int k = row_begin; k < row_end; ++k)
                col_pos[static_cast<std::size_t>(a_.cols[static_cast<std::size_t>(k)])] = -1;
        }
    }
};

}  // namespace

KrylovReport solve_cg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                      double tol, int max_iter, Precond pc) {
    const std::size_t n = static_cast<std::size_t>(a.n);
    if (b.size() != n) throw std::invalid_argument("solve_cg: size mismatch");
    x.resize(n, 0.0);

    const double bnorm = norm2(b);
    KrylovReport rep;
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        rep.converged = true;
        return rep;
    }

    Preconditioner prec(a, pc);
    std::vector<double> r(n), z(n), p(n), ap(n);
    a.mul(x.data(), r.data());
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];

    prec.apply(r, z);
    p = z;
    double rz = dot(r, z);
    double rnorm = norm2(r);

    for (int it = 0; it < max_iter; ++it) {
        if (rnorm <= tol * bnorm) {
            rep.converged = true;
            break;
        }
        a.mul(p.data(), ap.data());
        double pap = dot(p, ap);
        if (pap <= 0.0 || !std::isfinite(pap)) break;  // loss of positive-definiteness
        double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        prec.apply(r, z);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rnorm = norm2(r);
        rep.iterations = it + 1;
    }
    rep.converged = rep.converged || rnorm <= tol * bnorm;
    rep.rel_residual = rnorm / bnorm;
    return rep;
}

KrylovReport solve_bicgstab(const CsrMatrix& a, const std::vector<double>& b,
                            std::vector<double>& x, double tol, int max_iter, Precond pc) {
    const std::size_t n = static_cast<std::size_t>(a.n);
    if (b.size() != n) throw std::invalid_argument("solve_bicgstab: size mismatch");
    x.resize(n, 0.0);

    const double bnorm = norm2(b);
    KrylovReport rep;
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        rep.converged = true;
        return rep;
    }

    Preconditioner prec(a, pc);
    std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), ph(n), sh(n), s(n), t(n);
    a.mul(x.data(), r.data());
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    r0 = r;

    double rho_old = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = norm2(r);

    for (int it = 0; it < max_iter; ++it) {
        if (rnorm <= tol * bnorm) {
            rep.converged = true;
            break;
        }
        double rho = dot(r0, r);
        if (rho == 0.0 || !std::isfinite(rho)) break;  // breakdown
        if (it == 0) {
            p = r;
        } else {
            double beta = (rho / rho_old) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        prec.apply(p, ph);
        a.mul(ph.data(), v.data());
        double r0v = dot(r0, v);
        if (r0v == 0.0 || !std::isfinite(r0v)) break;
        alpha = rho / r0v;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) <= tol * bnorm) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i];
            rnorm = norm2(s);
            rep.iterations = it + 1;
            rep.converged = true;
            break;
        }
        prec.apply(s, sh);
        a.mul(sh.data(), t.data());
        double tt = dot(t, t);
        if (tt == 0.0 || !std::isfinite(tt)) break;
        omega = dot(t, s) / tt;
        if (omega == 0.0 || !std::isfinite(omega)) break;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        rho_old = rho;
        rnorm = norm2(r);
        rep.iterations = it + 1;
    }
    rep.converged = rep.converged || rnorm <= tol * bnorm;
    rep.rel_residual = bnorm > 0.0 ? rnorm / bnorm : 0.0;
    return rep;
}

}  // namespace ksfv
