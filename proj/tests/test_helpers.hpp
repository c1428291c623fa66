#pragma once

#include <random>

#include "phsyn/ph_core.hpp"
#include "phsyn/types.hpp"

namespace phsyn::testing {

inline Matrix randn(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) M(i, j) = gauss(rng);
    }
    return M;
}

/// Random valid pH form with moderate conditioning. damping scales the
/// dissipative part; damping = 0 gives a lossless system (W = 0).
inline PHForm random_ph(std::mt19937_64& rng, int n, int m,
                        double damping = 1.0) {
    PHForm ph;
    const Matrix Mj = randn(rng, n, n);
    ph.J = 0.5 * (Mj - Mj.transpose());
    const Matrix V = randn(rng, n + m + 2, n + m);
    const Matrix W = damping * (V.transpose() * V) / double(n + m + 2);
    ph.R = W.topLeftCorner(n, n);
    ph.F = W.topRightCorner(n, m);
    ph.S = W.bottomRightCorner(m, m);
    const Matrix U = randn(rng, n + 2, n);
    ph.Q = (U.transpose() * U) / double(n + 2) + 0.3 * Matrix::Identity(n, n);
    ph.G = randn(rng, n, m);
    const Matrix Mn = randn(rng, m, m);
    ph.N = 0.5 * (Mn - Mn.transpose());
    return ph;
}

/// Random stable state-space system; eigenvalues of A are pushed left by
/// the margin.
inline StateSpace random_stable_ss(std::mt19937_64& rng, int n, int m, int p,
                                   double margin = 0.2) {
    StateSpace ss;
    Matrix A = randn(rng, n, n) / std::sqrt(double(n));
    const Matrix As = 0.5 * (A - A.transpose());
    Matrix D0 = randn(rng, n, n);
    const Matrix Dis = (D0 * D0.transpose()) / double(n);
    ss.A = As - Dis - margin * Matrix::Identity(n, n);
    ss.B = randn(rng, n, m);
    ss.C = randn(rng, p, n);
    ss.D = 0.3 * randn(rng, p, m);
    return ss;
}

}  // namespace phsyn::testing
