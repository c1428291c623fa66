#include "phsyn/ph_core.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "phsyn/linalg.hpp"

namespace phsyn {

void StateSpace::check_dims() const {
    const auto n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() ||
        D.cols() != B.cols()) {
        throw DimensionError("StateSpace: inconsistent block dimensions");
    }
}

Matrix PHForm::passivity_matrix() const {
    const int n = state_dim();
    const int m = port_dim();
    Matrix W(n + m, n + m);
    W.topLeftCorner(n, n) = R;
    W.topRightCorner(n, m) = F;
    W.bottomLeftCorner(m, n) = F.transpose();
    W.bottomRightCorner(m, m) = S;
    return W;
}

void PHForm::check_dims() const {
    const auto n = J.rows();
    const auto m = G.cols();
    if (J.cols() != n || R.rows() != n || R.cols() != n || Q.rows() != n ||
        Q.cols() != n || G.rows() != n || F.rows() != n || F.cols() != m ||
        S.rows() != m || S.cols() != m || N.rows() != m || N.cols() != m) {
        throw DimensionError("PHForm: inconsistent block dimensions");
    }
}

void PHPlant::check_dims() const {
    ph.check_dims();
    const auto n = ph.state_dim();
    const auto m = ph.port_dim();
    const auto m1 = B1.cols();
    const auto p1 = C1.rows();
    if (B1.rows() != n || C1.cols() != n || D11.rows() != p1 || D11.cols() != m1 ||
        D12.rows() != p1 || D12.cols() != m || D21.rows() != m || D21.cols() != m1) {
        throw DimensionError("PHPlant: inconsistent block dimensions");
    }
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& e : entries) {
        os << (e.pass ? "[ok]   " : "[FAIL] ") << e.constraint
           << " (violation " << e.violation << ")\n";
    }
    os << (pass ? "valid port-Hamiltonian form" : "not a valid port-Hamiltonian form");
    return os.str();
}

ThetaVector::ThetaVector(Vector d, ThetaPartition p) : data(std::move(d)), part(p) {
    if (static_cast<int>(data.size()) != part.total()) {
        throw DimensionError("ThetaVector: length " + std::to_string(data.size()) +
                             " does not match partition total " +
                             std::to_string(part.total()));
    }
}

Matrix fill_upper(const Vector& v, int dim) {
    if (static_cast<int>(v.size()) != dim * (dim + 1) / 2) {
        throw DimensionError("fill_upper: wrong vector length");
    }
    Matrix U = Matrix::Zero(dim, dim);
    int idx = 0;
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            U(i, j) = v(idx++);
        }
    }
    return U;
}

Matrix fill_strict_upper(const Vector& v, int dim) {
    if (static_cast<int>(v.size()) != dim * (dim - 1) / 2) {
        throw DimensionError("fill_strict_upper: wrong vector length");
    }
    Matrix U = Matrix::Zero(dim, dim);
    int idx = 0;
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            U(i, j) = v(idx++);
        }
    }
    return U;
}

Matrix reshape_colmajor(const Vector& v, int rows, int cols) {
    if (static_cast<int>(v.size()) != rows * cols) {
        throw DimensionError("reshape_colmajor: wrong vector length");
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Vector read_upper(const Matrix& U) {
    const int dim = static_cast<int>(U.rows());
    Vector v(dim * (dim + 1) / 2);
    int idx = 0;
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            v(idx++) = U(i, j);
        }
    }
    return v;
}

Vector read_strict_upper(const Matrix& U) {
    const int dim = static_cast<int>(U.rows());
    Vector v(dim * (dim - 1) / 2);
    int idx = 0;
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            v(idx++) = U(i, j);
        }
    }
    return v;
}

ValidationReport validate_ph_form(const PHForm& ph, const ToleranceSet& tol) {
    ph.check_dims();
    ValidationReport rep;

    auto skew_entry = [&](const char* name, const Matrix& M) {
        const double viol = (M + M.transpose()).norm();
        const double bound = tol.structural * std::max(1.0, M.norm());
        rep.entries.push_back({std::string(name) + " skewness", viol, viol <= bound});
    };
    skew_entry("J", ph.J);
    skew_entry("N", ph.N);

    const Matrix W = ph.passivity_matrix();
    {
        const double asym = (W - W.transpose()).norm();
        const double bound = tol.structural * std::max(1.0, W.norm());
        rep.entries.push_back({"W symmetry", asym, asym <= bound});
        const double wmin = min_symmetric_eigenvalue(W);
        const double wnorm = W.rows() > 0 ? W.operatorNorm() : 0.0;
        rep.entries.push_back(
            {"W positive semidefiniteness (min eig)", wmin,
             wmin >= -tol.psd * std::max(1.0, wnorm)});
    }
    {
        const double asym = (ph.Q - ph.Q.transpose()).norm();
        const double bound = tol.structural * std::max(1.0, ph.Q.norm());
        rep.entries.push_back({"Q symmetry", asym, asym <= bound});
        const double qmin = min_symmetric_eigenvalue(ph.Q);
        rep.entries.push_back(
            {"Q positive definiteness (min eig)", qmin, qmin >= tol.pd});
    }

    rep.pass = true;
    for (const auto& e : rep.entries) rep.pass = rep.pass && e.pass;
    return rep;
}

void require_valid(const PHForm& ph, const ToleranceSet& tol) {
    const auto rep = validate_ph_form(ph, tol);
    if (!rep.pass) {
        throw CertificateError("port-Hamiltonian constraints violated:\n" +
                               rep.summary());
    }
}

ControllerBlocks unpack_parameters(const ThetaVector& theta) {
    const auto& p = theta.part;
    if (static_cast<int>(theta.data.size()) != p.total()) {
        throw DimensionError("unpack_parameters: theta length mismatch");
    }
    const int k = p.k;
    const int m = p.m;

    ControllerBlocks b;
    const Matrix Uj = fill_strict_upper(theta.data.segment(p.off_j(), p.len_j()), k);
    b.J = Uj.transpose() - Uj;
    const Matrix Uw = fill_upper(theta.data.segment(p.off_w(), p.len_w()), k + m);
    b.W = Uw.transpose() * Uw;
    const Matrix Uq = fill_upper(theta.data.segment(p.off_q(), p.len_q()), k);
    b.Q = Uq.transpose() * Uq;
    b.G = reshape_colmajor(theta.data.segment(p.off_g(), p.len_g()), k, m);
    const Matrix Un = fill_strict_upper(theta.data.segment(p.off_n(), p.len_n()), m);
    b.N = Un.transpose() - Un;
    return b;
}

double default_shift(const Matrix& Q) {
    const int k = static_cast<int>(Q.rows());
    const double trace_scale = k > 0 ? Q.trace() / k : 0.0;
    return 1e-8 * std::max(1.0, trace_scale);
}

PHForm theta_to_controller(const ThetaVector& theta, double shift) {
    const ControllerBlocks b = unpack_parameters(theta);
    const int k = theta.part.k;
    const int m = theta.part.m;
    if (shift < 0.0) shift = default_shift(b.Q);

    PHForm ph;
    ph.J = b.J;
    ph.R = b.W.topLeftCorner(k, k);
    ph.F = b.W.topRightCorner(k, m);
    ph.S = b.W.bottomRightCorner(m, m);
    ph.Q = b.Q + shift * Matrix::Identity(k, k);
    ph.G = b.G;
    ph.N = b.N;
    return ph;
}

ThetaVector controller_to_theta(const PHForm& ph, const ToleranceSet& tol) {
    ph.check_dims();
    const int k = ph.state_dim();
    const int m = ph.port_dim();

    const Matrix W = ph.passivity_matrix();
    const Matrix Uw = psd_upper_factor(W, tol.psd);

    const double qmin = min_symmetric_eigenvalue(ph.Q);
    if (qmin <= 0.0) {
        throw CertificateError("controller_to_theta: Q is not positive definite");
    }
    const Matrix Uq = psd_upper_factor(ph.Q, tol.psd);

    ThetaPartition p{k, m};
    Vector data(p.total());
    data.segment(p.off_j(), p.len_j()) = read_strict_upper(-ph.J);
    data.segment(p.off_w(), p.len_w()) = read_upper(Uw);
    data.segment(p.off_q(), p.len_q()) = read_upper(Uq);
    data.segment(p.off_g(), p.len_g()) =
        Eigen::Map<const Vector>(ph.G.data(), k * m);
    data.segment(p.off_n(), p.len_n()) = read_strict_upper(-ph.N);
    return ThetaVector(std::move(data), p);
}

StateSpace ph_to_statespace(const PHForm& ph) {
    ph.check_dims();
    StateSpace ss;
    ss.A = (ph.J - ph.R) * ph.Q;
    ss.B = ph.G - ph.F;
    ss.C = (ph.G + ph.F).transpose() * ph.Q;
    ss.D = ph.S - ph.N;
    return ss;
}

double hamiltonian_value(const PHForm& ph, const Vector& x) {
    if (x.size() != ph.state_dim()) {
        throw DimensionError("hamiltonian_value: state dimension mismatch");
    }
    return 0.5 * x.dot(ph.Q * x);
}

}  // namespace phsyn
