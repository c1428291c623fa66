#include "phsyn/hinf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "phsyn/linalg.hpp"
#include "phsyn/lti_eval.hpp"
#include "phsyn/parallel.hpp"

namespace phsyn {

double spectral_abscissa(const Matrix& A) { return max_real_eigenvalue(A); }

SigmaTable sigma_sweep(const TransferFn& response,
                       const std::vector<double>& grid) {
    if (grid.empty()) throw Error("sigma_sweep: empty frequency grid");
    SigmaTable table;
    table.omega = grid;

    const ComplexMatrix first = response(grid.front());
    const int nsv = static_cast<int>(std::min(first.rows(), first.cols()));
    table.sigma.resize(static_cast<int>(grid.size()), nsv);

    parallel_for(static_cast<int>(grid.size()), [&](int i) {
        const ComplexMatrix H = i == 0 ? first : response(grid[i]);
        Eigen::JacobiSVD<ComplexMatrix> svd(H);
        table.sigma.row(i) = svd.singularValues().head(nsv).transpose();
    });
    return table;
}

namespace {

double sigma_max_at(const StateSpace& ss, double omega) {
    const ComplexMatrix H = eval_transfer(ss, Complex(0.0, omega));
    Eigen::JacobiSVD<ComplexMatrix> svd(H);
    return svd.singularValues()(0);
}

// Bruinsma-Steinbuch Hamiltonian for the level gamma; requires
// gamma > sigma_max(D). H(gamma) has an eigenvalue at i*omega exactly when
// sigma_max(G(i*omega)) = gamma.
Matrix level_hamiltonian(const StateSpace& ss, double gamma) {
    const int n = ss.states();
    const int m = ss.inputs();
    const int p = ss.outputs();
    const Matrix R = gamma * gamma * Matrix::Identity(m, m) -
                     ss.D.transpose() * ss.D;
    const Matrix S = gamma * gamma * Matrix::Identity(p, p) -
                     ss.D * ss.D.transpose();
    const Eigen::LLT<Matrix> Rllt(R);
    const Eigen::LLT<Matrix> Sllt(S);
    if (Rllt.info() != Eigen::Success || Sllt.info() != Eigen::Success) {
        throw Error("hinf_norm: level at or below sigma_max(D)");
    }
    const Matrix RinvDtC = Rllt.solve(ss.D.transpose() * ss.C);
    const Matrix Abar = ss.A + ss.B * RinvDtC;

    Matrix H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = Abar;
    H.topRightCorner(n, n) = gamma * ss.B * Rllt.solve(ss.B.transpose());
    H.bottomLeftCorner(n, n) = -gamma * ss.C.transpose() * Sllt.solve(ss.C);
    H.bottomRightCorner(n, n) = -Abar.transpose();
    return H;
}

// Nonnegative frequencies of the imaginary-axis eigenvalues of H(gamma).
std::vector<double> imaginary_crossings(const StateSpace& ss, double gamma) {
    const Matrix H = level_hamiltonian(ss, gamma);
    Eigen::EigenSolver<Matrix> es(H, false);
    const ComplexVector ev = es.eigenvalues();

    double scale = 0.0;
    for (int i = 0; i < ev.size(); ++i) scale = std::max(scale, std::abs(ev(i)));
    const double tol = 1e-8 * std::max(1.0, scale);

    std::vector<double> omegas;
    for (int i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i).real()) <= tol && ev(i).imag() >= 0.0) {
            omegas.push_back(ev(i).imag());
        }
    }
    std::sort(omegas.begin(), omegas.end());
    return omegas;
}

}  // namespace

HinfResult hinf_norm(const StateSpace& ss, double rel_tol) {
    ss.check_dims();
    if (!(rel_tol > 0.0)) throw Error("hinf_norm: rel_tol must be positive");
    const int n = ss.states();

    Eigen::JacobiSVD<Matrix> dsvd(ss.D);
    const double sigma_d = ss.D.size() > 0 ? dsvd.singularValues()(0) : 0.0;

    HinfResult res;
    if (n == 0 || ss.B.norm() == 0.0 || ss.C.norm() == 0.0) {
        res.norm = sigma_d;
        res.peak_omega = 0.0;
        res.converged = true;
        return res;
    }
    const double abscissa = spectral_abscissa(ss.A);
    if (!(abscissa < 0.0)) {
        throw InstabilityError(
            "hinf_norm: A is not asymptotically stable (spectral abscissa " +
            std::to_string(abscissa) + ")");
    }

    // Lower bound from probe frequencies: 0, the eigenfrequencies of A and a
    // coarse log grid.
    std::set<double> probes{0.0};
    {
        Eigen::EigenSolver<Matrix> es(ss.A, false);
        for (int i = 0; i < n; ++i) {
            const double w = std::abs(es.eigenvalues()(i).imag());
            if (w > 0.0) probes.insert(w);
        }
        for (double w : log_grid(1e-4, 1e4, 25)) probes.insert(w);
    }
    double gamma_lo = sigma_d;
    double peak = 0.0;
    auto consider = [&](double w) {
        const double s = sigma_max_at(ss, w);
        if (s > gamma_lo) {
            gamma_lo = s;
            peak = w;
        }
        return s;
    };
    for (double w : probes) consider(w);

    // Evaluates sigma_max at crossing frequencies and interval midpoints,
    // raising gamma_lo (true attained values). Returns the largest value.
    auto refine_from_crossings = [&](const std::vector<double>& ws) {
        double best = 0.0;
        for (size_t i = 0; i < ws.size(); ++i) {
            best = std::max(best, consider(ws[i]));
            if (i + 1 < ws.size()) {
                best = std::max(best, consider(0.5 * (ws[i] + ws[i + 1])));
            }
        }
        return best;
    };

    // Find an upper level with no imaginary-axis eigenvalues.
    double gamma_hi = std::max(2.0 * gamma_lo, gamma_lo + 1.0);
    for (int i = 0; i < 80; ++i) {
        const auto ws = imaginary_crossings(ss, gamma_hi);
        if (ws.empty()) break;
        refine_from_crossings(ws);
        gamma_hi = std::max(2.0 * gamma_hi, 2.0 * gamma_lo);
        ++res.iterations;
    }

    const int max_iter = 200;
    while (gamma_hi - gamma_lo >
           rel_tol * std::max(gamma_lo, 1e-12) && res.iterations < max_iter) {
        ++res.iterations;
        const double gamma_mid = 0.5 * (gamma_lo + gamma_hi);
        const auto ws = imaginary_crossings(ss, gamma_mid);
        if (ws.empty()) {
            gamma_hi = gamma_mid;
            continue;
        }
        const double best = refine_from_crossings(ws);
        if (best <= gamma_mid) {
            // Tangential or spurious crossing; the level is attained at most
            // at gamma_mid, so it is a valid upper bound.
            gamma_hi = gamma_mid;
        }
        gamma_hi = std::max(gamma_hi, gamma_lo);
    }

    res.norm = 0.5 * (gamma_lo + gamma_hi);
    res.peak_omega = peak;
    res.converged = res.iterations < max_iter;
    return res;
}

}  // namespace phsyn
