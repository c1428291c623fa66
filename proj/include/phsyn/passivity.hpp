#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phsyn/types.hpp"

namespace phsyn {

struct PassivityCertificate {
    bool passive = false;
    double min_popov_eig = 0.0;  // most negative eigenvalue of Phi(i*omega) found
    std::optional<double> witness_omega;
    bool kyp_feasible = false;
    std::string method;  // "popov-sweep" | "hamiltonian-test"
    bool indeterminate = false;
};

struct PopovTable {
    std::vector<double> omega;
    Matrix eigs;  // one row per omega, eigenvalues ascending
};

/// Eigenvalues of the Popov function Phi(i*omega) = K(i*omega)^H + K(i*omega)
/// over the grid. Phi is Hermitian for real realizations, so the
/// eigenvalues are real.
PopovTable popov_sweep(const StateSpace& K_ss, const std::vector<double>& grid);

/// Default passivity tolerance 1e-8 * max(1, ||D + D^T||_2).
double passivity_tolerance(const StateSpace& K_ss);

/// Positive-realness certificate. With D + D^T nonsingular the decision runs
/// through the imaginary-axis-eigenvalue test on the Hamiltonian matrix of
/// the positive-real Riccati equation; otherwise a dense Popov sweep (plus
/// residue checks at imaginary-axis poles) decides. tol < 0 selects
/// passivity_tolerance(K_ss).
PassivityCertificate kyp_check(const StateSpace& K_ss, double tol = -1.0);

/// Lower-triangular factor L_c with P_c = L_c L_c^T, where P_c solves
/// A P_c + P_c A^T + B B^T = 0. Throws InstabilityError for unstable A.
Matrix controllability_gramian_cholesky(const StateSpace& K_ss);

struct EnforceConfig {
    double rho_initial = 1.0;
    double rho_scale = 10.0;
    int max_rounds = 14;
    int bfgs_budget = 400;
    double tol = -1.0;  // < 0: passivity_tolerance(K_ss)
    int audit_points = 4096;
    double audit_wmin = 1e-4;
    double audit_wmax = 1e4;
};

struct EnforceResult {
    StateSpace controller;
    double perturbation_norm = 0.0;  // ||Xi||_F
    double rho_final = 0.0;
    PassivityCertificate certificate;
};

/// Passivation by output-map perturbation: replaces C with C + Xi * L_c and
/// minimizes ||Xi||_F^2 + rho * sum_w sum_j max(0, -lambda_j(Phi(i*w)))^2
/// over Xi, increasing rho until a dense Popov audit and the KYP test both
/// certify the result. Only C is perturbed; an indefinite D + D^T is
/// infeasible and raises InfeasibleError.
EnforceResult passivity_enforce(const StateSpace& K_ss,
                                const std::vector<double>& grid,
                                const EnforceConfig& config = {});

}  // namespace phsyn
