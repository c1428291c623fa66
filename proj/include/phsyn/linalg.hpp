#pragma once

#include "phsyn/types.hpp"

namespace phsyn {

/// Symmetric eigenvalue helpers (operate on the symmetric part).
double min_symmetric_eigenvalue(const Matrix& M);

/// Max real part over the eigenvalues of a general square matrix.
double max_real_eigenvalue(const Matrix& M);

/// Upper-triangular factor U with M = U^T U and nonnegative diagonal.
/// Falls back to an eigenvalue-clamped factorization followed by QR
/// re-triangularization when the Cholesky of a semidefinite M breaks down.
/// Throws CertificateError when min eig < -tol * max(1, ||M||).
Matrix psd_upper_factor(const Matrix& M, double tol);

/// Solves A X + X A^T + W = 0 (continuous Lyapunov, W symmetric) by
/// Bartels-Stewart on the complex Schur form of A. Requires that A and -A^T
/// share no eigenvalue (holds for stable A).
Matrix lyapunov_solve(const Matrix& A, const Matrix& W);

/// Log-spaced grid of n points on [wmin, wmax], endpoints included.
std::vector<double> log_grid(double wmin, double wmax, int n);

}  // namespace phsyn
