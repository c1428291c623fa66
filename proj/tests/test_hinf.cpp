#include <doctest.h>

#include <random>

#include "phsyn/bench.hpp"
#include "phsyn/hinf.hpp"
#include "phsyn/linalg.hpp"
#include "phsyn/lti_eval.hpp"
#include "test_helpers.hpp"

using namespace phsyn;

namespace {

StateSpace scalar_ss(double a, double b, double c, double d) {
    StateSpace ss;
    ss.A = Matrix::Constant(1, 1, a);
    ss.B = Matrix::Constant(1, 1, b);
    ss.C = Matrix::Constant(1, 1, c);
    ss.D = Matrix::Constant(1, 1, d);
    return ss;
}

TransferFn response_of(const StateSpace& ss) {
    return [ss](double w) { return eval_transfer(ss, Complex(0.0, w)); };
}

// Independent oracle: dense log grid plus golden-section refinement around
// the best grid cell.
double grid_norm_oracle(const StateSpace& ss, int points, double wmin,
                        double wmax, double* argmax = nullptr) {
    auto smax = [&](double w) {
        Eigen::JacobiSVD<ComplexMatrix> svd(eval_transfer(ss, Complex(0.0, w)));
        return svd.singularValues()(0);
    };
    const auto grid = log_grid(wmin, wmax, points);
    double best = smax(0.0);
    double wbest = 0.0;
    for (double w : grid) {
        const double s = smax(w);
        if (s > best) {
            best = s;
            wbest = w;
        }
    }
    double lo = std::max(wbest / 1.2, wmin / 10.0);
    double hi = wbest * 1.2;
    if (wbest == 0.0) {
        lo = 0.0;
        hi = grid.front();
    }
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = smax(x1), f2 = smax(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = smax(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = smax(x1);
        }
    }
    const double refined = std::max(best, std::max(f1, f2));
    if (argmax) *argmax = f1 > f2 ? x1 : x2;
    return refined;
}

}  // namespace

TEST_CASE("sigma_sweep of the scalar lag") {
    const StateSpace ss = scalar_ss(-1.0, 1.0, 1.0, 0.0);
    const SigmaTable t = sigma_sweep(response_of(ss), {0.0, 1.0, 10.0});
    CHECK(t.sigma(0, 0) == doctest::Approx(1.0));
    CHECK(t.sigma(1, 0) == doctest::Approx(0.7071).epsilon(1e-3));
    CHECK(t.sigma(2, 0) == doctest::Approx(0.0995).epsilon(1e-3));
}

TEST_CASE("sigma_sweep of a static gain") {
    StateSpace ss;
    ss.A = Matrix::Zero(0, 0);
    ss.B = Matrix::Zero(0, 2);
    ss.C = Matrix::Zero(2, 0);
    ss.D = Matrix{{3.0, 0.0}, {0.0, 1.0}};
    const SigmaTable t = sigma_sweep(response_of(ss), {0.1, 1.0, 100.0});
    for (int i = 0; i < 3; ++i) {
        CHECK(t.sigma(i, 0) == doctest::Approx(3.0));
        CHECK(t.sigma(i, 1) == doctest::Approx(1.0));
    }
}

TEST_CASE("sigma_sweep matches brute-force plant recomputation") {
    MSDConfig cfg;
    cfg.n_masses = 5;
    const PHPlant plant = msd_plant(cfg);
    PlantEvaluator ev(plant);
    const ThetaPartition part{1, plant.port_dim()};
    const StateSpace K =
        ph_to_statespace(theta_to_controller(
            ThetaVector(Vector::Zero(part.total()), part), 1e-8));

    const auto grid = log_grid(1e-2, 1e2, 41);
    const SigmaTable t = sigma_sweep(
        [&](double w) {
            return closed_loop_response(ev, K, FeedbackSign::Negative, w);
        },
        grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        const auto pe = eval_plant(plant, Complex(0.0, grid[i]));
        const ComplexMatrix Kv = eval_transfer(K, Complex(0.0, grid[i]));
        const ComplexMatrix H = lower_lft(pe, Kv, FeedbackSign::Negative);
        Eigen::JacobiSVD<ComplexMatrix> svd(H);
        for (int j = 0; j < t.sigma.cols(); ++j) {
            CHECK(std::abs(t.sigma(static_cast<int>(i), j) -
                           svd.singularValues()(j)) < 1e-12);
        }
    }
}

TEST_CASE("sigma_sweep is invariant under similarity transformations") {
    std::mt19937_64 rng(53);
    const StateSpace ss = testing::random_stable_ss(rng, 6, 2, 2);
    Matrix T = testing::randn(rng, 6, 6);
    T += 6.0 * Matrix::Identity(6, 6);  // well-conditioned
    const Matrix Tinv = T.inverse();
    StateSpace sim;
    sim.A = T * ss.A * Tinv;
    sim.B = T * ss.B;
    sim.C = ss.C * Tinv;
    sim.D = ss.D;

    const auto grid = log_grid(1e-2, 1e2, 21);
    const SigmaTable a = sigma_sweep(response_of(ss), grid);
    const SigmaTable b = sigma_sweep(response_of(sim), grid);
    CHECK((a.sigma - b.sigma).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("hinf_norm of the scalar lag is 1 at omega 0") {
    const HinfResult r = hinf_norm(scalar_ss(-1.0, 1.0, 1.0, 0.0), 1e-6);
    CHECK(r.converged);
    CHECK(r.norm == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.peak_omega == doctest::Approx(0.0));
}

TEST_CASE("hinf_norm of a lightly damped resonance") {
    // 1/(s^2 + 0.1 s + 1): peak 1/(2 zeta sqrt(1-zeta^2)) = 10.01252...
    // at omega = sqrt(1 - 2 zeta^2) = 0.997497 for zeta = 0.05.
    StateSpace ss;
    ss.A = Matrix{{0.0, 1.0}, {-1.0, -0.1}};
    ss.B = Matrix{{0.0}, {1.0}};
    ss.C = Matrix{{1.0, 0.0}};
    ss.D = Matrix::Zero(1, 1);
    const HinfResult r = hinf_norm(ss, 1e-6);
    CHECK(r.norm == doctest::Approx(10.012523).epsilon(1e-4));
    CHECK(r.peak_omega == doctest::Approx(0.997497).epsilon(1e-3));
}

TEST_CASE("hinf_norm of a static system is sigma_max(D)") {
    StateSpace ss;
    ss.A = -Matrix::Identity(3, 3);
    ss.B = Matrix::Zero(3, 2);
    ss.C = Matrix::Ones(2, 3);
    ss.D = Matrix{{2.0, 0.0}, {0.0, 0.5}};
    const HinfResult r = hinf_norm(ss, 1e-8);
    CHECK(r.norm == doctest::Approx(2.0));
}

TEST_CASE("hinf_norm rejects unstable systems") {
    CHECK_THROWS_AS(hinf_norm(scalar_ss(0.1, 1.0, 1.0, 0.0), 1e-6),
                    InstabilityError);
}

TEST_CASE("hinf_norm dominates every grid sample") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 10; ++trial) {
        const StateSpace ss = testing::random_stable_ss(rng, 8, 2, 2);
        const double rel_tol = 1e-6;
        const HinfResult r = hinf_norm(ss, rel_tol);
        const SigmaTable t = sigma_sweep(response_of(ss), log_grid(1e-3, 1e3, 200));
        CHECK(r.norm >= t.sigma.col(0).maxCoeff() * (1.0 - rel_tol) - 1e-12);
    }
}

TEST_CASE("hinf_norm agrees with the refined-grid oracle") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const StateSpace ss = testing::random_stable_ss(rng, 10, 2, 3, 0.3);
        const HinfResult r = hinf_norm(ss, 1e-7);
        const double oracle = grid_norm_oracle(ss, 20000, 1e-4, 1e4);
        CHECK(std::abs(r.norm - oracle) <= 1e-4 * std::max(1.0, oracle));
    }
}

TEST_CASE("spectral_abscissa") {
    CHECK(spectral_abscissa(Matrix{{0.0, 1.0}, {-1.0, 0.0}}) ==
          doctest::Approx(0.0));
    CHECK(spectral_abscissa(-Matrix::Identity(3, 3)) == doctest::Approx(-1.0));
}
