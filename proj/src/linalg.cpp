#include "phsyn/linalg.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

namespace phsyn {

double min_symmetric_eigenvalue(const Matrix& M) {
    Matrix sym = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_real_eigenvalue(const Matrix& M) {
    if (M.rows() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(M, false);
    return es.eigenvalues().real().maxCoeff();
}

Matrix psd_upper_factor(const Matrix& M, double tol) {
    const int d = static_cast<int>(M.rows());
    Matrix sym = 0.5 * (M + M.transpose());
    if (d == 0) return Matrix::Zero(0, 0);

    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() == Eigen::Success) {
        Matrix L = llt.matrixL();
        return L.transpose();
    }

    // Semidefinite (or slightly indefinite) case.
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    const Vector evals = es.eigenvalues();
    const double scale = std::max(1.0, std::abs(evals.cwiseAbs().maxCoeff()));
    if (evals.minCoeff() < -tol * scale) {
        throw CertificateError("matrix is not positive semidefinite (min eig " +
                               std::to_string(evals.minCoeff()) + ")");
    }
    Matrix Mfac = es.eigenvectors() * evals.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    // Re-triangularize: M^T = Q R  =>  M M^T = R^T R.
    Eigen::HouseholderQR<Matrix> qr(Mfac.transpose());
    Matrix U = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
        if (U(i, i) < 0.0) U.row(i) = -U.row(i);
    }
    return U;
}

Matrix lyapunov_solve(const Matrix& A, const Matrix& W) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || W.rows() != n || W.cols() != n) {
        throw DimensionError("lyapunov_solve: dimension mismatch");
    }
    if (n == 0) return Matrix::Zero(0, 0);

    Eigen::ComplexSchur<Matrix> schur(A);
    if (schur.info() != Eigen::Success) {
        throw Error("lyapunov_solve: Schur decomposition failed");
    }
    const ComplexMatrix T = schur.matrixT();
    const ComplexMatrix U = schur.matrixU();

    // T Y + Y T^H + C = 0 with C = U^H W U, solved column-wise from the last
    // column: (T + conj(T_jj) I) y_j = -c_j - sum_{l>j} y_l conj(T_jl).
    ComplexMatrix C = U.adjoint() * W.cast<Complex>() * U;
    ComplexMatrix Y = ComplexMatrix::Zero(n, n);
    for (int j = n - 1; j >= 0; --j) {
        ComplexVector rhs = -C.col(j);
        for (int l = j + 1; l < n; ++l) {
            rhs -= Y.col(l) * std::conj(T(j, l));
        }
        ComplexMatrix Tsh = T;
        Tsh.diagonal().array() += std::conj(T(j, j));
        Y.col(j) = Tsh.triangularView<Eigen::Upper>().solve(rhs);
    }
    Matrix X = (U * Y * U.adjoint()).real();
    return 0.5 * (X + X.transpose());
}

std::vector<double> log_grid(double wmin, double wmax, int n) {
    if (!(wmin > 0.0) || !(wmax > wmin) || n < 2) {
        if (n == 1) return {wmin};
        throw Error("log_grid: need 0 < wmin < wmax and n >= 2");
    }
    std::vector<double> g(n);
    const double l0 = std::log10(wmin);
    const double l1 = std::log10(wmax);
    for (int i = 0; i < n; ++i) {
        g[i] = std::pow(10.0, l0 + (l1 - l0) * i / (n - 1));
    }
    return g;
}

}  // namespace phsyn
