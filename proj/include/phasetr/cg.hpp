#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasetr/sparse.hpp"

namespace phasetr {

struct SolverOptions {
    double tol = 1e-10;  // relative residual tolerance
    int max_iter = 5000;

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("SolverOptions: tol must be > 0");
        if (max_iter < 1) throw std::invalid_argument("SolverOptions: max_iter must be >= 1");
    }
};

struct SolveFailure : std::runtime_error {
    SolveFailure(const std::string& msg, double res, int iters)
        : std::runtime_error(msg), residual(res), iterations(iters) {}
    double residual;
    int iterations;
};

// Conjugate gradients with Jacobi (diagonal) preconditioning for SPD systems.
// Returns x with ||Ax - b||_2 <= tol * ||b||_2. Deterministic for fixed inputs.
inline std::vector<double> cg_solve(const SparseMatrix& A, const std::vector<double>& b,
                                    const std::vector<double>& x0, const SolverOptions& opts) {
    opts.validate();
    if (A.n_rows != A.n_cols) throw std::invalid_argument("cg_solve: matrix not square");
    const int n = A.n_rows;
    if (static_cast<int>(b.size()) != n || static_cast<int>(x0.size()) != n)
        throw std::invalid_argument("cg_solve: dimension mismatch");

    const double bnorm = norm2(b);
    if (bnorm == 0.0) return std::vector<double>(n, 0.0);

    std::vector<double> inv_diag = A.diagonal();
    for (double& v : inv_diag) {
        if (!(v > 0.0)) throw std::invalid_argument("cg_solve: non-positive diagonal entry");
        v = 1.0 / v;
    }

    std::vector<double> x = x0;
    std::vector<double> r(n), z(n), p(n), Ap(n);
    A.multiply(x, Ap);
    for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];

    double rnorm = norm2(r);
    if (rnorm <= opts.tol * bnorm) return x;

    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        A.multiply(p, Ap);
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0))
            throw SolveFailure("cg_solve: matrix not positive definite (p'Ap <= 0)", rnorm, iter);
        const double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        rnorm = norm2(r);
        if (rnorm <= opts.tol * bnorm) return x;
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolveFailure("cg_solve: no convergence within max_iter, residual " +
                           std::to_string(rnorm / bnorm),
                       rnorm / bnorm, opts.max_iter);
}

}  // namespace phasetr
