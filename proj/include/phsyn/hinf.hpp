#pragma once

#include <functional>
#include <vector>

#include "phsyn/types.hpp"

namespace phsyn {

struct HinfResult {
    double norm = 0.0;
    double peak_omega = 0.0;  // argmax frequency (rad/s)
    int iterations = 0;
    bool converged = false;
};

/// Frequency response of the system under test at s = i*omega.
using TransferFn = std::function<ComplexMatrix(double omega)>;

struct SigmaTable {
    std::vector<double> omega;
    Matrix sigma;  // one row per omega, singular values descending
};

/// Full singular-value sweep over the grid. Pole / ill-posedness errors of
/// the evaluator propagate tagged with the offending omega.
SigmaTable sigma_sweep(const TransferFn& response,
                       const std::vector<double>& grid);

/// H-infinity norm of a stable realization by gamma-bisection on the
/// imaginary-axis-eigenvalue test of the associated Hamiltonian matrix,
/// with singular-value evaluations at crossing-interval midpoints driving
/// the lower bound. Throws InstabilityError when A is not asymptotically
/// stable.
HinfResult hinf_norm(const StateSpace& ss, double rel_tol = 1e-6);

/// Max real part over the eigenvalues of A.
double spectral_abscissa(const Matrix& A);

}  // namespace phsyn
