#include "phsyn/synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>

#include <Eigen/Eigenvalues>

#include "phsyn/hinf.hpp"
#include "phsyn/linalg.hpp"
#include "phsyn/optim.hpp"
#include "phsyn/parallel.hpp"

namespace phsyn {

SampleSet SampleSet::log_spaced(double wmin, double wmax, int n) {
    return from_points(log_grid(wmin, wmax, n), false);
}

SampleSet SampleSet::from_points(const std::vector<double>& points,
                                 bool adaptive_tag) {
    SampleSet s;
    std::vector<double> sorted = points;
    std::sort(sorted.begin(), sorted.end());
    for (double w : sorted) s.add(w, adaptive_tag);
    s.check();
    return s;
}

bool SampleSet::add(double omega, bool adaptive_tag, double min_rel_gap) {
    if (!std::isfinite(omega)) throw Error("SampleSet: non-finite frequency");
    auto it = std::lower_bound(omegas.begin(), omegas.end(), omega);
    const double scale = std::max(1.0, std::abs(omega));
    if (it != omegas.end() && std::abs(*it - omega) <= min_rel_gap * scale) {
        return false;
    }
    if (it != omegas.begin() &&
        std::abs(*(it - 1) - omega) <= min_rel_gap * scale) {
        return false;
    }
    adaptive.insert(adaptive.begin() + (it - omegas.begin()), adaptive_tag);
    omegas.insert(it, omega);
    return true;
}

void SampleSet::check() const {
    if (omegas.empty()) throw Error("SampleSet: empty");
    for (size_t i = 1; i < omegas.size(); ++i) {
        if (!(omegas[i] > omegas[i - 1])) {
            throw Error("SampleSet: not sorted/deduplicated");
        }
    }
}

void SynthesisConfig::check() const {
    if (order < 0) throw Error("SynthesisConfig: order must be >= 0");
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) {
        throw Error("SynthesisConfig: eps1, eps2 must be positive");
    }
    if (!(omega_min < omega_max) || !(omega_min > 0.0)) {
        throw Error("SynthesisConfig: need 0 < omega_min < omega_max");
    }
    if (initial_samples < 1) throw Error("SynthesisConfig: initial_samples < 1");
}

namespace {

struct ControllerEval {
    PHForm ph;
    StateSpace ss;
    // Cached pieces reused by the gradient.
    Matrix Qs;  // Q + shift*I
};

ControllerEval build_controller(const ThetaVector& theta, double q_shift) {
    ControllerEval ce;
    ce.ph = theta_to_controller(theta, q_shift);
    ce.ss = ph_to_statespace(ce.ph);
    ce.Qs = ce.ph.Q;
    return ce;
}

double bracket_sq(double sigma, double gamma) {
    const double v = sigma - gamma;
    return v > 0.0 ? v * v : 0.0;
}

}  // namespace

double loss(double gamma, const PlantEvaluator& plant, const ThetaVector& theta,
            const SampleSet& samples, FeedbackSign sign, double q_shift) {
    if (!(gamma > 0.0)) throw Error("loss: gamma must be positive");
    samples.check();
    const ControllerEval ce = build_controller(theta, q_shift);
    const int nsv = std::min(plant.dist_dim(), plant.perf_dim());

    double total = 0.0;
    std::mutex mu;
    parallel_for(samples.size(), [&](int i) {
        const double w = samples.omegas[i];
        const ComplexMatrix H =
            lower_lft(plant.at(w), eval_transfer(ce.ss, Complex(0.0, w)), sign);
        Eigen::JacobiSVD<ComplexMatrix> svd(H);
        double part = 0.0;
        for (int j = 0; j < nsv; ++j) {
            part += bracket_sq(svd.singularValues()(j), gamma);
        }
        std::lock_guard<std::mutex> lock(mu);
        total += part;
    });
    return total / gamma;
}

double loss_with_gradient(double gamma, const PlantEvaluator& plant,
                          const ThetaVector& theta, const SampleSet& samples,
                          Vector& grad, FeedbackSign sign, double q_shift) {
    if (!(gamma > 0.0)) throw Error("loss: gamma must be positive");
    samples.check();
    const ControllerEval ce = build_controller(theta, q_shift);
    const auto& part = theta.part;
    const int k = part.k;
    const int m = part.m;
    const int nsv = std::min(plant.dist_dim(), plant.perf_dim());
    const double sgn = sign == FeedbackSign::Positive ? 1.0 : -1.0;

    const ComplexMatrix Ak = ce.ss.A.cast<Complex>();
    const ComplexMatrix Bk = ce.ss.B.cast<Complex>();
    const ComplexMatrix Ck = ce.ss.C.cast<Complex>();
    const ComplexMatrix Dk = ce.ss.D.cast<Complex>();

    double total = 0.0;
    Matrix GA = Matrix::Zero(k, k);
    Matrix GB = Matrix::Zero(k, m);
    Matrix GC = Matrix::Zero(m, k);
    Matrix GD = Matrix::Zero(m, m);
    std::mutex mu;

    parallel_for(samples.size(), [&](int i) {
        const double w = samples.omegas[i];
        const Complex s(0.0, w);
        const PlantEvaluation pe = plant.at(w);

        ComplexMatrix Z;
        if (k > 0) {
            ComplexMatrix M = -Ak;
            M.diagonal().array() += s;
            Eigen::PartialPivLU<ComplexMatrix> lu(M);
            if (!(lu.rcond() > 1e-13)) {
                throw PoleAtSampleError("loss: controller pole at sample", s);
            }
            Z = lu.solve(ComplexMatrix::Identity(k, k));
        } else {
            Z = ComplexMatrix::Zero(0, 0);
        }
        const ComplexMatrix Kv = k > 0 ? ComplexMatrix(Ck * Z * Bk + Dk) : Dk;

        const int p2 = static_cast<int>(pe.P22.rows());
        ComplexMatrix Mx = ComplexMatrix::Identity(p2, p2) - sgn * pe.P22 * Kv;
        Eigen::PartialPivLU<ComplexMatrix> lux(Mx);
        if (!(lux.rcond() > 1e-13)) {
            throw IllPosedError("loss: interconnection ill-posed at omega = " +
                                    std::to_string(w),
                                s);
        }
        const ComplexMatrix XP21 = lux.solve(pe.P21);
        const ComplexMatrix H = pe.P11 + sgn * pe.P12 * Kv * XP21;

        Eigen::JacobiSVD<ComplexMatrix> svd(
            H, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector sv = svd.singularValues();

        double part_loss = 0.0;
        Matrix pGA = Matrix::Zero(k, k);
        Matrix pGB = Matrix::Zero(k, m);
        Matrix pGC = Matrix::Zero(m, k);
        Matrix pGD = Matrix::Zero(m, m);
        bool any_active = false;

        ComplexMatrix Xp;  // (I - sgn K P22)^{-1}
        const ComplexMatrix L = k > 0 ? ComplexMatrix(Ck * Z) : ComplexMatrix(m, 0);
        const ComplexMatrix Rv = k > 0 ? ComplexMatrix(Z * Bk) : ComplexMatrix(0, m);

        for (int j = 0; j < nsv; ++j) {
            const double sigma = sv(j);
            if (sigma <= gamma) continue;
            part_loss += bracket_sq(sigma, gamma);
            if (!any_active) {
                ComplexMatrix Mp =
                    ComplexMatrix::Identity(m, m) - sgn * Kv * pe.P22;
                Xp = Mp.partialPivLu().solve(ComplexMatrix::Identity(m, m));
                any_active = true;
            }
            const double weight = (2.0 / gamma) * (sigma - gamma) * sgn;
            const ComplexVector a = Xp.adjoint() * (pe.P12.adjoint() * svd.matrixU().col(j));
            const ComplexVector b = XP21 * svd.matrixV().col(j);
            pGD += weight * (a.conjugate() * b.transpose()).real();
            if (k > 0) {
                const ComplexVector alpha = L.adjoint() * a;
                const ComplexVector beta = Rv * b;
                pGA += weight * (alpha.conjugate() * beta.transpose()).real();
                pGB += weight * (alpha.conjugate() * b.transpose()).real();
                pGC += weight * (a.conjugate() * beta.transpose()).real();
            }
        }

        std::lock_guard<std::mutex> lock(mu);
        total += part_loss;
        GA += pGA;
        GB += pGB;
        GC += pGC;
        GD += pGD;
    });

    // Pull the realization gradients back through
    //   A = (J - R) Qs,  B = G - F,  C = (G + F)^T Qs,  D = S - N
    // and then through the triangular parameter maps.
    const Matrix& Qs = ce.Qs;
    const Matrix JmR = ce.ph.J - ce.ph.R;
    const Matrix GpF = ce.ph.G + ce.ph.F;

    Matrix GJ = GA * Qs.transpose();
    Matrix GR = -GJ;
    Matrix GQ = JmR.transpose() * GA + GpF * GC;
    Matrix GG = GB + Qs * GC.transpose();
    Matrix GF = -GB + Qs * GC.transpose();
    Matrix GS = GD;
    Matrix GN = -GD;

    Matrix GW(k + m, k + m);
    GW.setZero();
    GW.topLeftCorner(k, k) = GR;
    GW.topRightCorner(k, m) = GF;
    GW.bottomRightCorner(m, m) = GS;

    const Matrix Uw = fill_upper(theta.data.segment(part.off_w(), part.len_w()),
                                 k + m);
    const Matrix Uq = fill_upper(theta.data.segment(part.off_q(), part.len_q()), k);

    grad.resize(part.total());
    grad.segment(part.off_j(), part.len_j()) =
        read_strict_upper(GJ.transpose() - GJ);
    grad.segment(part.off_w(), part.len_w()) =
        read_upper(Uw * (GW + GW.transpose()));
    grad.segment(part.off_q(), part.len_q()) =
        read_upper(Uq * (GQ + GQ.transpose()));
    grad.segment(part.off_g(), part.len_g()) =
        Eigen::Map<const Vector>(GG.data(), k * m);
    grad.segment(part.off_n(), part.len_n()) =
        read_strict_upper(GN.transpose() - GN);

    return total / gamma;
}

Vector loss_gradient(double gamma, const PlantEvaluator& plant,
                     const ThetaVector& theta, const SampleSet& samples,
                     FeedbackSign sign, double q_shift) {
    Vector grad;
    loss_with_gradient(gamma, plant, theta, samples, grad, sign, q_shift);
    return grad;
}

SampleSet update_samples(const SampleSet& samples, const PlantEvaluator& plant,
                         const ThetaVector& theta, double gamma,
                         const SynthesisConfig& config) {
    samples.check();
    const ControllerEval ce = build_controller(theta, config.q_shift);

    const std::vector<double> audit =
        plant.is_sampled()
            ? plant.fixed_grid()
            : log_grid(config.omega_min, config.omega_max, config.audit_points);
    const int na = static_cast<int>(audit.size());

    std::vector<double> curve(na);
    parallel_for(na, [&](int i) {
        const ComplexMatrix H =
            lower_lft(plant.at(audit[i]),
                      eval_transfer(ce.ss, Complex(0.0, audit[i])), config.sign);
        Eigen::JacobiSVD<ComplexMatrix> svd(H);
        curve[i] = svd.singularValues()(0);
    });

    const double level = gamma * (1.0 - config.audit_slack);
    SampleSet out = samples;
    bool added = false;
    for (int i = 0; i < na; ++i) {
        const bool left_ok = i == 0 || curve[i] >= curve[i - 1];
        const bool right_ok = i + 1 == na || curve[i] >= curve[i + 1];
        if (!(left_ok && right_ok) || curve[i] <= level) continue;
        added |= out.add(audit[i], true, 1e-3);
    }
    if (added) ++out.generation;
    return out;
}

MinimizeResult minimize_loss(double gamma, const PlantEvaluator& plant,
                             const ThetaVector& theta0, const SampleSet& samples,
                             int budget, const SynthesisConfig& config) {
    const ThetaPartition part = theta0.part;
    BfgsOptions opts;
    opts.max_iterations = budget;
    opts.grad_tol = 1e-8;
    opts.f_target = config.eps2 / 4.0;

    bool first_eval = true;
    const auto objective = [&](const Vector& x, Vector* g) -> double {
        const ThetaVector th(x, part);
        try {
            double f;
            if (g) {
                f = loss_with_gradient(gamma, plant, th, samples, *g,
                                       config.sign, config.q_shift);
            } else {
                f = loss(gamma, plant, th, samples, config.sign, config.q_shift);
            }
            first_eval = false;
            return f;
        } catch (const PoleAtSampleError&) {
            if (first_eval) throw;  // loss must be finite at theta0
        } catch (const IllPosedError&) {
            if (first_eval) throw;
        }
        // A trial step walked into a pole or an ill-posed loop; let the
        // line search back off.
        return std::numeric_limits<double>::infinity();
    };
    const BfgsResult br = bfgs_minimize(objective, theta0.data, opts);

    MinimizeResult mr;
    mr.theta = ThetaVector(br.x, part);
    mr.alpha = br.f;
    mr.iterations = br.iterations;
    mr.degraded = br.line_search_failed;
    return mr;
}

ThetaVector initial_theta(int k, int m, std::uint64_t seed, double noise) {
    ThetaPartition part{k, m};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Vector data = Vector::Zero(part.total());
    for (int i = 0; i < part.len_j(); ++i) {
        data(part.off_j() + i) = noise * gauss(rng);
    }
    Matrix Uw = Matrix::Identity(k + m, k + m);
    for (int i = 0; i < k + m; ++i) {
        for (int j = i; j < k + m; ++j) Uw(i, j) += noise * gauss(rng);
    }
    data.segment(part.off_w(), part.len_w()) = read_upper(Uw);
    Matrix Uq = Matrix::Identity(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) Uq(i, j) += noise * gauss(rng);
    }
    data.segment(part.off_q(), part.len_q()) = read_upper(Uq);
    for (int i = 0; i < part.len_g(); ++i) {
        data(part.off_g() + i) = noise * gauss(rng);
    }
    for (int i = 0; i < part.len_n(); ++i) {
        data(part.off_n() + i) = noise * gauss(rng);
    }
    return ThetaVector(std::move(data), part);
}

namespace {

double max_sampled_sigma(const PlantEvaluator& plant, const StateSpace& K,
                         FeedbackSign sign, const SampleSet& samples) {
    double best = 0.0;
    std::mutex mu;
    parallel_for(samples.size(), [&](int i) {
        const double w = samples.omegas[i];
        const ComplexMatrix H = closed_loop_response(plant, K, sign, w);
        Eigen::JacobiSVD<ComplexMatrix> svd(H);
        std::lock_guard<std::mutex> lock(mu);
        best = std::max(best, svd.singularValues()(0));
    });
    return best;
}

SampleSet initial_sample_set(const PlantEvaluator& plant,
                             const SynthesisConfig& config) {
    if (!plant.is_sampled()) {
        return SampleSet::log_spaced(config.omega_min, config.omega_max,
                                     config.initial_samples);
    }
    // Sampled plants constrain S to the file grid: take an evenly strided
    // subset of the requested size.
    const auto& grid = plant.fixed_grid();
    const int n = static_cast<int>(grid.size());
    const int want = std::min(config.initial_samples, n);
    std::vector<double> pts;
    pts.reserve(want);
    for (int i = 0; i < want; ++i) {
        pts.push_back(grid[static_cast<size_t>(i) * (n - 1) / std::max(1, want - 1)]);
    }
    return SampleSet::from_points(pts, false);
}

}  // namespace

SynthesisReport sobsyn(const PlantEvaluator& plant,
                       const SynthesisConfig& config) {
    config.check();
    const auto t0 = std::chrono::steady_clock::now();
    const int k = config.order;
    const int m = plant.port_dim();

    ThetaVector theta = initial_theta(k, m, config.seed, config.theta_noise);
    SampleSet samples = initial_sample_set(plant, config);

    SynthesisReport report;

    double gamma_u = config.gamma_u;
    if (!(gamma_u > 0.0)) {
        const StateSpace K0 =
            ph_to_statespace(theta_to_controller(theta, config.q_shift));
        gamma_u = 1.1 * max_sampled_sigma(plant, K0, config.sign, samples);
        if (!(gamma_u > 0.0)) gamma_u = 1.0;
    }

    // The upper bound must be reachable: the inner minimization at gamma_u
    // has to drive the loss below eps2, doubling the bound a bounded number
    // of times before giving up.
    ThetaVector best_theta = theta;
    {
        bool ok = false;
        for (int attempt = 0; attempt <= config.max_gamma_doublings; ++attempt) {
            MinimizeResult mr = minimize_loss(gamma_u, plant, theta, samples,
                                              config.max_bfgs_iterations, config);
            report.degraded_convergence |= mr.degraded;
            theta = mr.theta;
            report.history.push_back({gamma_u, mr.alpha, samples.size(),
                                      mr.iterations, mr.alpha <= config.eps2});
            if (mr.alpha <= config.eps2) {
                best_theta = theta;
                ok = true;
                break;
            }
            gamma_u *= 2.0;
        }
        if (!ok) {
            throw InfeasibleError(
                "sobsyn: could not reach the loss tolerance at the initial "
                "upper bound gamma_u (after doubling)");
        }
    }

    double gamma_l = 0.0;
    for (int outer = 0;; ++outer) {
        while ((gamma_u - gamma_l) / (gamma_u + gamma_l) > config.eps1) {
            const double gamma = 0.5 * (gamma_u + gamma_l);
            samples = update_samples(samples, plant, theta, gamma, config);
            MinimizeResult mr = minimize_loss(gamma, plant, theta, samples,
                                              config.max_bfgs_iterations, config);
            report.degraded_convergence |= mr.degraded;
            theta = mr.theta;  // warm start carries forward on both branches
            const bool accepted = mr.alpha <= config.eps2;
            report.history.push_back(
                {gamma, mr.alpha, samples.size(), mr.iterations, accepted});
            if (accepted) {
                gamma_u = gamma;
                best_theta = theta;
            } else {
                gamma_l = gamma;
            }
        }

        const PlantSS* pss = plant.statespace();
        if (!pss || outer >= config.validation_rounds) break;

        // Check the certified level against the validated norm of the best
        // feasible controller; a materially larger norm means a resonance
        // slipped between samples.
        const StateSpace K =
            ph_to_statespace(theta_to_controller(best_theta, config.q_shift));
        double achieved = 0.0;
        double peak = 0.0;
        const StateSpace cl = closed_loop_system(*pss, K, config.sign);
        if (cl.states() <= 400) {
            const HinfResult hr = hinf_norm(cl, 1e-6);
            achieved = hr.norm;
            peak = hr.peak_omega;
        } else {
            StateSpaceEvaluator ev(cl);
            for (double w :
                 log_grid(config.omega_min, config.omega_max, 10000)) {
                Eigen::JacobiSVD<ComplexMatrix> svd(ev.at(w));
                if (svd.singularValues()(0) > achieved) {
                    achieved = svd.singularValues()(0);
                    peak = w;
                }
            }
        }
        if (achieved <= gamma_u * (1.0 + config.audit_slack)) break;

        bool added = false;
        if (peak > 0.0) {
            added |= samples.add(peak * (1.0 - 1e-4), true, 1e-6);
            added |= samples.add(peak, true, 1e-6);
            added |= samples.add(peak * (1.0 + 1e-4), true, 1e-6);
        } else {
            added |= samples.add(0.0, true, 1e-6);
        }
        if (!added) break;
        ++samples.generation;

        // Resume the bisection from the enlarged level with the missed peak
        // now sampled.
        theta = best_theta;
        gamma_l = 0.0;
        gamma_u = std::max(gamma_u, 1.05 * achieved);
        bool ok = false;
        for (int attempt = 0; attempt <= config.max_gamma_doublings; ++attempt) {
            MinimizeResult mr = minimize_loss(gamma_u, plant, theta, samples,
                                              config.max_bfgs_iterations, config);
            report.degraded_convergence |= mr.degraded;
            theta = mr.theta;
            report.history.push_back({gamma_u, mr.alpha, samples.size(),
                                      mr.iterations, mr.alpha <= config.eps2});
            if (mr.alpha <= config.eps2) {
                best_theta = theta;
                ok = true;
                break;
            }
            gamma_u *= 2.0;
        }
        if (!ok) {
            throw InfeasibleError(
                "sobsyn: validation feedback could not re-establish a "
                "feasible upper bound");
        }
    }

    report.theta = best_theta;
    report.controller = theta_to_controller(best_theta, config.q_shift);
    report.gamma_lo = gamma_l;
    report.gamma_hi = gamma_u;

    // Synthesis-phase factorization count; the validation sweeps below are
    // reporting, not synthesis cost.
    report.plant_factorizations = plant.factorization_count();

    const StateSpace K = ph_to_statespace(report.controller);
    if (config.validate) {
        if (const PlantSS* pss = plant.statespace()) {
            const StateSpace cl = closed_loop_system(*pss, K, config.sign);
            report.closed_loop_abscissa = spectral_abscissa(cl.A);
            if (cl.states() <= 400) {
                const HinfResult hr = hinf_norm(cl, 1e-6);
                report.achieved_hinf = hr.norm;
                report.peak_omega = hr.peak_omega;
                report.hinf_validated = true;
            } else {
                // Grid-certified bound at large scale.
                double best = 0.0;
                double peak = 0.0;
                const auto grid =
                    log_grid(config.omega_min, config.omega_max, 10000);
                for (double w : grid) {
                    const ComplexMatrix H =
                        closed_loop_response(plant, K, config.sign, w);
                    Eigen::JacobiSVD<ComplexMatrix> svd(H);
                    if (svd.singularValues()(0) > best) {
                        best = svd.singularValues()(0);
                        peak = w;
                    }
                }
                report.achieved_hinf = best;
                report.peak_omega = peak;
                report.hinf_validated = false;
            }
        } else {
            double best = 0.0;
            double peak = 0.0;
            for (double w : plant.fixed_grid()) {
                const ComplexMatrix H =
                    closed_loop_response(plant, K, config.sign, w);
                Eigen::JacobiSVD<ComplexMatrix> svd(H);
                if (svd.singularValues()(0) > best) {
                    best = svd.singularValues()(0);
                    peak = w;
                }
            }
            report.achieved_hinf = best;
            report.peak_omega = peak;
            report.hinf_validated = false;
        }
        report.controller_certificate = kyp_check(K);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
}

SynthesisReport sobsyn(const PHPlant& plant, const SynthesisConfig& config) {
    PlantEvaluator evaluator(plant);
    return sobsyn(evaluator, config);
}

}  // namespace phsyn
