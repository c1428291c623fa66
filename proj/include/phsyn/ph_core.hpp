#pragma once

#include <string>
#include <vector>

#include "phsyn/types.hpp"

namespace phsyn {

/// Structured realization (J, R, Q, G, F, S, N) of a port-Hamiltonian
/// system
///
///   dx/dt = (J - R) Q x + (G - F) u
///       y = (G + F)^T Q x + (S - N) u
///
/// with J, N skew-symmetric, W = [[R, F], [F^T, S]] symmetric psd and
/// Q symmetric positive definite.
struct PHForm {
    Matrix J;  // n x n, skew
    Matrix R;  // n x n
    Matrix Q;  // n x n, energy metric
    Matrix G;  // n x m
    Matrix F;  // n x m
    Matrix S;  // m x m
    Matrix N;  // m x m, skew

    int state_dim() const { return static_cast<int>(J.rows()); }
    int port_dim() const { return static_cast<int>(G.cols()); }

    /// Passivity matrix W = [[R, F], [F^T, S]], (n+m) x (n+m).
    Matrix passivity_matrix() const;

    void check_dims() const;
};

/// pH subsystem from control input to measured output plus unstructured
/// performance channels. The measured-output port dimension p2 equals the
/// pH port dimension m; D22 of the generic plant equals S - N here.
struct PHPlant {
    PHForm ph;
    Matrix B1;   // n x m1, disturbance input map
    Matrix C1;   // p1 x n, performance output map
    Matrix D11;  // p1 x m1
    Matrix D12;  // p1 x m
    Matrix D21;  // p2 x m1

    int state_dim() const { return ph.state_dim(); }
    int port_dim() const { return ph.port_dim(); }       // m = p2
    int dist_dim() const { return static_cast<int>(B1.cols()); }  // m1
    int perf_dim() const { return static_cast<int>(C1.rows()); }  // p1

    void check_dims() const;
};

struct ValidationEntry {
    std::string constraint;
    double violation;  // measured quantity (norm or signed eigenvalue margin)
    bool pass;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;
    bool pass = false;

    std::string summary() const;
};

/// Partition bookkeeping for the flat controller parameter vector theta.
/// Layout: [theta_J | theta_W | theta_Q | theta_G | theta_N] with sizes
/// k(k-1)/2, (k+m)(k+m+1)/2, k(k+1)/2, k*m, m(m-1)/2.
struct ThetaPartition {
    int k = 0;  // controller order
    int m = 0;  // port dimension p2

    int len_j() const { return k * (k - 1) / 2; }
    int len_w() const { return (k + m) * (k + m + 1) / 2; }
    int len_q() const { return k * (k + 1) / 2; }
    int len_g() const { return k * m; }
    int len_n() const { return m * (m - 1) / 2; }

    int off_j() const { return 0; }
    int off_w() const { return len_j(); }
    int off_q() const { return off_w() + len_w(); }
    int off_g() const { return off_q() + len_q(); }
    int off_n() const { return off_g() + len_g(); }

    int total() const { return off_n() + len_n(); }
};

/// Flat unconstrained parameter vector for a pH controller of order k with
/// m ports, together with its partition.
struct ThetaVector {
    Vector data;
    ThetaPartition part;

    ThetaVector() = default;
    ThetaVector(Vector d, ThetaPartition p);

    int size() const { return static_cast<int>(data.size()); }
};

/// Controller matrices produced from theta before block extraction:
/// J skew k x k, W psd (k+m) x (k+m), Q psd k x k, G k x m, N skew m x m.
struct ControllerBlocks {
    Matrix J;
    Matrix W;
    Matrix Q;
    Matrix G;
    Matrix N;
};

// Triangular fill maps. fill_upper lays the vector into the upper triangle
// row-major including the diagonal; fill_strict_upper excludes the diagonal;
// reshape_colmajor reshapes a length rows*cols vector column-major.
Matrix fill_upper(const Vector& v, int dim);
Matrix fill_strict_upper(const Vector& v, int dim);
Matrix reshape_colmajor(const Vector& v, int rows, int cols);

// Inverses of the fill maps (read the corresponding entries back out).
Vector read_upper(const Matrix& U);
Vector read_strict_upper(const Matrix& U);

ValidationReport validate_ph_form(const PHForm& ph, const ToleranceSet& tol = {});

/// Throws CertificateError if the form fails validation.
void require_valid(const PHForm& ph, const ToleranceSet& tol = {});

ControllerBlocks unpack_parameters(const ThetaVector& theta);

/// Builds the pH controller realization from theta. The energy metric is
/// regularized as Q + shift*I so that it is strictly positive definite for
/// every theta; shift < 0 selects the default 1e-8 * max(1, tr(Q)/k).
PHForm theta_to_controller(const ThetaVector& theta, double shift = -1.0);

double default_shift(const Matrix& Q);

/// Recovers a theta vector reproducing the given pH controller via upper
/// Cholesky-type factors with nonnegative diagonal.
ThetaVector controller_to_theta(const PHForm& ph, const ToleranceSet& tol = {});

StateSpace ph_to_statespace(const PHForm& ph);

/// Energy storage 0.5 * x^T Q x.
double hamiltonian_value(const PHForm& ph, const Vector& x);

}  // namespace phsyn
