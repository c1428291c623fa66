#include "phsyn/lti_eval.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace phsyn {

namespace {

constexpr double kSingularRcond = 1e-13;

// Solves (s*I - H) X = B for upper-Hessenberg H by Gaussian elimination with
// partial pivoting on adjacent rows; O(n^2) per right-hand side.
ComplexMatrix hessenberg_solve(const Matrix& H, Complex s, ComplexMatrix B) {
    const int n = static_cast<int>(H.rows());
    ComplexMatrix M = (-H).cast<Complex>();
    M.diagonal().array() += s;
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff() + std::abs(s));

    for (int j = 0; j < n - 1; ++j) {
        if (std::abs(M(j + 1, j)) > std::abs(M(j, j))) {
            M.row(j).tail(n - j).swap(M.row(j + 1).tail(n - j));
            B.row(j).swap(B.row(j + 1));
        }
        if (std::abs(M(j, j)) <= 1e-14 * scale) {
            throw PoleAtSampleError("transfer function pole at sample point", s);
        }
        const Complex factor = M(j + 1, j) / M(j, j);
        M.row(j + 1).tail(n - j) -= factor * M.row(j).tail(n - j);
        B.row(j + 1) -= factor * B.row(j);
    }
    if (n > 0 && std::abs(M(n - 1, n - 1)) <= 1e-14 * scale) {
        throw PoleAtSampleError("transfer function pole at sample point", s);
    }
    return M.triangularView<Eigen::Upper>().solve(B);
}

}  // namespace

PlantSS PlantSS::from_ph(const PHPlant& plant) {
    plant.check_dims();
    const StateSpace uy = ph_to_statespace(plant.ph);
    PlantSS ss;
    ss.A = uy.A;
    ss.B1 = plant.B1;
    ss.B2 = uy.B;
    ss.C1 = plant.C1;
    ss.C2 = uy.C;
    ss.D11 = plant.D11;
    ss.D12 = plant.D12;
    ss.D21 = plant.D21;
    ss.D22 = uy.D;
    return ss;
}

void SampledPlant::check() const {
    if (points.empty()) throw SchemaError("sampled plant: no sample points");
    const auto& first = points.front();
    for (size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (p.P11.rows() != first.P11.rows() || p.P11.cols() != first.P11.cols() ||
            p.P12.rows() != first.P12.rows() || p.P12.cols() != first.P12.cols() ||
            p.P21.rows() != first.P21.rows() || p.P21.cols() != first.P21.cols() ||
            p.P22.rows() != first.P22.rows() || p.P22.cols() != first.P22.cols()) {
            throw SchemaError("sampled plant: inconsistent block dimensions");
        }
        if (i > 0 && !(points[i - 1].omega < p.omega)) {
            throw SchemaError("sampled plant: omega grid not strictly ascending");
        }
    }
}

std::vector<double> SampledPlant::grid() const {
    std::vector<double> g(points.size());
    std::transform(points.begin(), points.end(), g.begin(),
                   [](const PlantEvaluation& p) { return p.omega; });
    return g;
}

ComplexMatrix eval_transfer(const StateSpace& ss, Complex s) {
    ss.check_dims();
    const int n = ss.states();
    if (n == 0) return ss.D.cast<Complex>();

    ComplexMatrix M = (-ss.A).cast<Complex>();
    M.diagonal().array() += s;
    Eigen::PartialPivLU<ComplexMatrix> lu(M);
    if (!(lu.rcond() > kSingularRcond)) {
        throw PoleAtSampleError("transfer function pole at sample point", s);
    }
    return ss.C.cast<Complex>() * lu.solve(ss.B.cast<Complex>()) +
           ss.D.cast<Complex>();
}

PlantEvaluation eval_plant(const PHPlant& plant, Complex s) {
    const PlantSS ss = PlantSS::from_ph(plant);
    const int n = ss.states();
    const int m1 = ss.dist_dim();
    const int m = ss.ctrl_dim();
    const int p1 = ss.perf_dim();
    const int p2 = ss.meas_dim();

    ComplexMatrix X(n, m1 + m);
    if (n > 0) {
        ComplexMatrix M = (-ss.A).cast<Complex>();
        M.diagonal().array() += s;
        Eigen::PartialPivLU<ComplexMatrix> lu(M);
        if (!(lu.rcond() > kSingularRcond)) {
            throw PoleAtSampleError("plant pole at sample point", s);
        }
        ComplexMatrix B(n, m1 + m);
        B << ss.B1.cast<Complex>(), ss.B2.cast<Complex>();
        X = lu.solve(B);
    }

    ComplexMatrix C(p1 + p2, n);
    C << ss.C1.cast<Complex>(), ss.C2.cast<Complex>();
    ComplexMatrix D(p1 + p2, m1 + m);
    D << ss.D11.cast<Complex>(), ss.D12.cast<Complex>(),
         ss.D21.cast<Complex>(), ss.D22.cast<Complex>();
    ComplexMatrix P = C * X + D;

    PlantEvaluation pe;
    pe.omega = s.imag();
    pe.P11 = P.topLeftCorner(p1, m1);
    pe.P12 = P.topRightCorner(p1, m);
    pe.P21 = P.bottomLeftCorner(p2, m1);
    pe.P22 = P.bottomRightCorner(p2, m);
    return pe;
}

PlantEvaluator::PlantEvaluator(const PHPlant& plant) {
    ss_ = PlantSS::from_ph(plant);
    n_ = ss_->states();
    m1_ = ss_->dist_dim();
    m_ = ss_->ctrl_dim();
    p1_ = ss_->perf_dim();

    if (n_ > 0) {
        Eigen::HessenbergDecomposition<Matrix> hd(ss_->A);
        hess_u_ = hd.matrixQ();
        hess_h_ = hd.matrixH();
    } else {
        hess_u_ = Matrix::Zero(0, 0);
        hess_h_ = Matrix::Zero(0, 0);
    }
    Matrix ball(n_, m1_ + m_);
    ball << ss_->B1, ss_->B2;
    bt_ = hess_u_.transpose() * ball;
    Matrix call(p1_ + m_, n_);
    call << ss_->C1, ss_->C2;
    ct_ = call * hess_u_;
    dall_.resize(p1_ + m_, m1_ + m_);
    dall_ << ss_->D11, ss_->D12, ss_->D21, ss_->D22;
}

PlantEvaluator::PlantEvaluator(SampledPlant samples) {
    samples.check();
    const auto& first = samples.points.front();
    p1_ = static_cast<int>(first.P11.rows());
    m1_ = static_cast<int>(first.P11.cols());
    m_ = static_cast<int>(first.P22.cols());
    if (first.P22.rows() != m_) {
        throw SchemaError("sampled plant: P22 must be square (p2 = m)");
    }
    grid_ = samples.grid();
    sampled_ = std::move(samples);
}

const std::vector<double>& PlantEvaluator::fixed_grid() const {
    if (!sampled_) {
        throw Error("fixed_grid: state-space-backed plants have no fixed grid");
    }
    return grid_;
}

PlantEvaluation PlantEvaluator::evaluate(double omega) const {
    const Complex s(0.0, omega);
    const int p2 = m_;
    ComplexMatrix P;
    if (n_ > 0) {
        ComplexMatrix X = hessenberg_solve(hess_h_, s, bt_.cast<Complex>());
        fact_count_.fetch_add(1);
        P = ct_.cast<Complex>() * X + dall_.cast<Complex>();
    } else {
        P = dall_.cast<Complex>();
    }
    PlantEvaluation pe;
    pe.omega = omega;
    pe.P11 = P.topLeftCorner(p1_, m1_);
    pe.P12 = P.topRightCorner(p1_, m_);
    pe.P21 = P.bottomLeftCorner(p2, m1_);
    pe.P22 = P.bottomRightCorner(p2, m_);
    return pe;
}

PlantEvaluation PlantEvaluator::at(double omega) const {
    if (sampled_) {
        auto it = std::lower_bound(grid_.begin(), grid_.end(),
                                   omega - 1e-12 * std::max(1.0, std::abs(omega)));
        if (it == grid_.end() ||
            std::abs(*it - omega) > 1e-12 * std::max(1.0, std::abs(omega))) {
            throw Error("sampled plant: frequency " + std::to_string(omega) +
                        " is not on the sample grid");
        }
        return sampled_->points[it - grid_.begin()];
    }

    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(omega);
        if (it != cache_.end()) return it->second;
    }
    PlantEvaluation pe = evaluate(omega);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(omega, std::move(pe)).first->second;
}

StateSpaceEvaluator::StateSpaceEvaluator(StateSpace ss) : ss_(std::move(ss)) {
    ss_.check_dims();
    const int n = ss_.states();
    if (n > 0) {
        Eigen::HessenbergDecomposition<Matrix> hd(ss_.A);
        hess_u_ = hd.matrixQ();
        hess_h_ = hd.matrixH();
        bt_ = hess_u_.transpose() * ss_.B;
        ct_ = ss_.C * hess_u_;
    }
}

ComplexMatrix StateSpaceEvaluator::at(double omega) const {
    if (ss_.states() == 0) return ss_.D.cast<Complex>();
    const Complex s(0.0, omega);
    const ComplexMatrix X = hessenberg_solve(hess_h_, s, bt_.cast<Complex>());
    return ct_.cast<Complex>() * X + ss_.D.cast<Complex>();
}

ComplexMatrix lower_lft(const PlantEvaluation& pe, const ComplexMatrix& K,
                        FeedbackSign sign) {
    const double sgn = sign == FeedbackSign::Positive ? 1.0 : -1.0;
    const int p2 = static_cast<int>(pe.P22.rows());
    if (K.rows() != pe.P22.cols() || K.cols() != p2) {
        throw DimensionError("lower_lft: controller dimensions do not match P22");
    }
    ComplexMatrix M = ComplexMatrix::Identity(p2, p2) - sgn * pe.P22 * K;
    Eigen::PartialPivLU<ComplexMatrix> lu(M);
    if (!(lu.rcond() > kSingularRcond)) {
        throw IllPosedError("lower_lft: interconnection ill-posed at omega = " +
                                std::to_string(pe.omega),
                            Complex(0.0, pe.omega));
    }
    return pe.P11 + sgn * pe.P12 * K * lu.solve(pe.P21);
}

namespace {

// Shared assembly for the closed-loop matrix and full realization. With
// K~ = sign * K the couplings u = sign * y_K, u_K = y reduce to positive
// feedback algebra:
//   [[I, -D~_K], [-D22, I]] [u; y] = [C~_K x_K; C2 x + D21 w].
struct LoopPieces {
    Matrix Tx;  // (m+p2) x (n+k): [u; y] response to [x; x_K]
    Matrix Tw;  // (m+p2) x m1:    [u; y] response to w
    Matrix Bblk;  // (n+k) x (m+p2): [[B2, 0], [0, B_K]]
};

LoopPieces assemble_loop(const Matrix& B2, const Matrix& C2, const Matrix& D22,
                         const Matrix& D21, const StateSpace& ctrl,
                         FeedbackSign sign) {
    const double sgn = sign == FeedbackSign::Positive ? 1.0 : -1.0;
    const int n = static_cast<int>(C2.cols());
    const int k = ctrl.states();
    const int m = static_cast<int>(B2.cols());
    const int p2 = static_cast<int>(C2.rows());
    if (ctrl.inputs() != p2 || ctrl.outputs() != m) {
        throw DimensionError("closed loop: controller I/O does not match plant");
    }

    Matrix W(m + p2, m + p2);
    W << Matrix::Identity(m, m), -sgn * ctrl.D, -D22,
        Matrix::Identity(p2, p2);
    Eigen::PartialPivLU<Matrix> lu(W);
    if (!(lu.rcond() > kSingularRcond)) {
        throw IllPosedError("closed loop: interconnection ill-posed");
    }

    Matrix rhs_x(m + p2, n + k);
    rhs_x.setZero();
    rhs_x.topRightCorner(m, k) = sgn * ctrl.C;
    rhs_x.bottomLeftCorner(p2, n) = C2;

    Matrix rhs_w(m + p2, D21.cols());
    rhs_w.setZero();
    rhs_w.bottomRows(p2) = D21;

    LoopPieces lp;
    lp.Tx = lu.solve(rhs_x);
    lp.Tw = lu.solve(rhs_w);
    lp.Bblk = Matrix::Zero(n + k, m + p2);
    lp.Bblk.topLeftCorner(n, m) = B2;
    lp.Bblk.bottomRightCorner(k, p2) = ctrl.B;
    return lp;
}

}  // namespace

Matrix closed_loop_matrix(const StateSpace& plant_uy, const StateSpace& ctrl,
                          FeedbackSign sign) {
    plant_uy.check_dims();
    ctrl.check_dims();
    const int n = plant_uy.states();
    const int k = ctrl.states();
    const Matrix D21 = Matrix::Zero(plant_uy.outputs(), 0);
    const LoopPieces lp =
        assemble_loop(plant_uy.B, plant_uy.C, plant_uy.D, D21, ctrl, sign);

    Matrix Acl = Matrix::Zero(n + k, n + k);
    Acl.topLeftCorner(n, n) = plant_uy.A;
    Acl.bottomRightCorner(k, k) = ctrl.A;
    Acl += lp.Bblk * lp.Tx;
    return Acl;
}

StateSpace closed_loop_system(const PlantSS& plant, const StateSpace& ctrl,
                              FeedbackSign sign) {
    ctrl.check_dims();
    const int n = plant.states();
    const int k = ctrl.states();
    const int m = plant.ctrl_dim();
    const LoopPieces lp =
        assemble_loop(plant.B2, plant.C2, plant.D22, plant.D21, ctrl, sign);

    StateSpace cl;
    cl.A = Matrix::Zero(n + k, n + k);
    cl.A.topLeftCorner(n, n) = plant.A;
    cl.A.bottomRightCorner(k, k) = ctrl.A;
    cl.A += lp.Bblk * lp.Tx;

    cl.B = Matrix::Zero(n + k, plant.dist_dim());
    cl.B.topRows(n) = plant.B1;
    cl.B += lp.Bblk * lp.Tw;

    cl.C = Matrix::Zero(plant.perf_dim(), n + k);
    cl.C.leftCols(n) = plant.C1;
    cl.C += plant.D12 * lp.Tx.topRows(m);

    cl.D = plant.D11 + plant.D12 * lp.Tw.topRows(m);
    return cl;
}

MatrixPencil closed_loop_pencil(const PHForm& plant_ph, const PHForm& ctrl) {
    plant_ph.check_dims();
    ctrl.check_dims();
    const int n = plant_ph.state_dim();
    const int k = ctrl.state_dim();
    const int m = plant_ph.port_dim();
    if (ctrl.port_dim() != m) {
        throw DimensionError("closed_loop_pencil: port dimension mismatch");
    }
    const StateSpace p = ph_to_statespace(plant_ph);
    const StateSpace c = ph_to_statespace(ctrl);
    const int dim = n + k + 2 * m;

    MatrixPencil pencil;
    pencil.E = Matrix::Zero(dim, dim);
    pencil.E.topLeftCorner(n + k, n + k).setIdentity();

    Matrix& M = pencil.M;
    M = Matrix::Zero(dim, dim);
    M.block(0, 0, n, n) = p.A;
    M.block(0, n + k, n, m) = p.B;
    M.block(n, n, k, k) = c.A;
    M.block(n, n + k + m, k, m) = c.B;
    M.block(n + k, 0, m, n) = -p.C;
    M.block(n + k, n + k, m, m) = -p.D;
    M.block(n + k, n + k + m, m, m) = -Matrix::Identity(m, m);
    M.block(n + k + m, n, m, k) = -c.C;
    M.block(n + k + m, n + k, m, m) = Matrix::Identity(m, m);
    M.block(n + k + m, n + k + m, m, m) = -c.D;
    return pencil;
}

MatrixPencil closed_loop_pencil(const PHPlant& plant, const PHForm& ctrl) {
    return closed_loop_pencil(plant.ph, ctrl);
}

PencilEigenvalues pencil_eigenvalues(const MatrixPencil& pencil) {
    Eigen::GeneralizedEigenSolver<Matrix> ges;
    ges.compute(pencil.M, pencil.E, false);
    const ComplexVector alphas = ges.alphas();
    const Vector betas = ges.betas();

    const double beta_scale = betas.cwiseAbs().maxCoeff();
    PencilEigenvalues out;
    for (int i = 0; i < betas.size(); ++i) {
        if (std::abs(betas(i)) <= 1e-8 * std::max(1.0, beta_scale)) {
            ++out.infinite_count;
        } else {
            out.finite.push_back(alphas(i) / betas(i));
        }
    }
    return out;
}

Trajectory simulate_lti(const StateSpace& ss, const Matrix& u, const Vector& x0,
                        double dt) {
    ss.check_dims();
    if (!(dt > 0.0)) throw Error("simulate_lti: dt must be positive");
    if (u.rows() != ss.inputs()) {
        throw DimensionError("simulate_lti: input row count must equal m");
    }
    if (x0.size() != ss.states()) {
        throw DimensionError("simulate_lti: x0 dimension mismatch");
    }
    const int nsteps = static_cast<int>(u.cols());
    const int n = ss.states();

    Trajectory traj;
    traj.dt = dt;
    traj.x.resize(n, nsteps);
    traj.y.resize(ss.outputs(), nsteps);

    Vector x = x0;
    for (int j = 0; j < nsteps; ++j) {
        traj.x.col(j) = x;
        traj.y.col(j) = ss.C * x + ss.D * u.col(j);
        if (j + 1 == nsteps) break;
        const Vector bu = ss.B * u.col(j);
        const Vector k1 = ss.A * x + bu;
        const Vector k2 = ss.A * (x + 0.5 * dt * k1) + bu;
        const Vector k3 = ss.A * (x + 0.5 * dt * k2) + bu;
        const Vector k4 = ss.A * (x + dt * k3) + bu;
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return traj;
}

ComplexMatrix closed_loop_response(const PlantEvaluator& plant,
                                   const StateSpace& ctrl, FeedbackSign sign,
                                   double omega) {
    const ComplexMatrix K = eval_transfer(ctrl, Complex(0.0, omega));
    return lower_lft(plant.at(omega), K, sign);
}

}  // namespace phsyn
