#pragma once

#include <cstdint>
#include <vector>

#include "phsyn/lti_eval.hpp"
#include "phsyn/passivity.hpp"
#include "phsyn/ph_core.hpp"
#include "phsyn/types.hpp"

namespace phsyn {

/// Sorted, deduplicated frequency sample set with provenance bookkeeping.
struct SampleSet {
    std::vector<double> omegas;
    std::vector<bool> adaptive;  // per point: false = initial, true = adaptive
    int generation = 0;

    static SampleSet log_spaced(double wmin, double wmax, int n);
    static SampleSet from_points(const std::vector<double>& points,
                                 bool adaptive_tag = false);

    /// Inserts keeping order; rejects points closer than the relative gap
    /// (default the structural dedup gap 1e-12). Returns true when added.
    bool add(double omega, bool adaptive_tag = true, double min_rel_gap = 1e-12);

    int size() const { return static_cast<int>(omegas.size()); }
    void check() const;
};

struct SynthesisConfig {
    int order = 1;              // controller order k
    double gamma_u = 0.0;       // initial upper bound; <= 0 selects
                                // 1.1 * max sampled sigma at theta0
    double eps1 = 1e-2;         // bisection tolerance
    double eps2 = 1e-6;         // termination tolerance on the loss
    int max_bfgs_iterations = 500;
    double omega_min = 1e-3;
    double omega_max = 1e3;
    int initial_samples = 100;
    std::uint64_t seed = 0;
    FeedbackSign sign = FeedbackSign::Negative;
    int audit_points = 1000;    // dense audit grid for sample updates
    double audit_slack = 0.05;  // accept maxima above gamma*(1 - slack)
    double theta_noise = 0.1;
    double q_shift = 1e-8;      // constant energy-metric regularization
    int max_gamma_doublings = 10;
    bool validate = true;       // post-hoc norm/stability/passivity checks
    // Sharp closed-loop resonances can slip between samples; after the
    // bisection the certified level is checked against the validated norm
    // and the offending peak is folded back into the sample set, up to this
    // many extra bisection rounds (state-space plants only).
    int validation_rounds = 3;

    void check() const;
};

struct IterationRecord {
    double gamma = 0.0;
    double alpha = 0.0;
    int sample_count = 0;
    int bfgs_iterations = 0;
    bool accepted = false;
};

struct SynthesisReport {
    ThetaVector theta;  // best feasible parameters
    PHForm controller;
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;
    std::vector<IterationRecord> history;
    double achieved_hinf = 0.0;  // validated norm (or grid bound)
    double peak_omega = 0.0;
    bool hinf_validated = false;  // true when the norm solver ran
    double closed_loop_abscissa = 0.0;
    PassivityCertificate controller_certificate;
    double wall_seconds = 0.0;
    long plant_factorizations = 0;
    bool degraded_convergence = false;
};

/// Sample-based penalty loss
///   (1/gamma) sum_{w in S} sum_{j <= min(m1,p1)}
///       max(0, sigma_j(H(i w)) - gamma)^2
/// for the closed loop H = P * K(theta) under the configured feedback sign.
/// An ill-posed or pole sample is a hard error.
double loss(double gamma, const PlantEvaluator& plant, const ThetaVector& theta,
            const SampleSet& samples, FeedbackSign sign = FeedbackSign::Negative,
            double q_shift = 1e-8);

/// Analytic gradient of the loss with respect to theta (chain rule through
/// the active singular values, the LFT, the controller realization and the
/// triangular parameter maps). Returns the loss value.
double loss_with_gradient(double gamma, const PlantEvaluator& plant,
                          const ThetaVector& theta, const SampleSet& samples,
                          Vector& grad,
                          FeedbackSign sign = FeedbackSign::Negative,
                          double q_shift = 1e-8);

Vector loss_gradient(double gamma, const PlantEvaluator& plant,
                     const ThetaVector& theta, const SampleSet& samples,
                     FeedbackSign sign = FeedbackSign::Negative,
                     double q_shift = 1e-8);

/// Audits the closed-loop response on a dense grid and appends every local
/// maximizer above gamma*(1 - audit_slack) that is farther than a relative
/// gap of 1e-3 from the existing points. Never removes points. Sampled
/// plants are audited on their fixed grid (subset selection).
SampleSet update_samples(const SampleSet& samples, const PlantEvaluator& plant,
                         const ThetaVector& theta, double gamma,
                         const SynthesisConfig& config);

struct MinimizeResult {
    ThetaVector theta;
    double alpha = 0.0;
    int iterations = 0;
    bool degraded = false;  // line-search failure; best iterate returned
};

/// Inner BFGS minimization of the loss at fixed gamma.
MinimizeResult minimize_loss(double gamma, const PlantEvaluator& plant,
                             const ThetaVector& theta0, const SampleSet& samples,
                             int budget, const SynthesisConfig& config);

/// Seeded initialization: triangular factors of W and Q start at identity
/// plus small noise, remaining blocks at small gaussians, so the initial
/// controller is a well-conditioned strictly passive system near zero gain.
ThetaVector initial_theta(int k, int m, std::uint64_t seed, double noise = 0.1);

/// Fixed-order structured synthesis: gamma-bisection around the sample-based
/// inner minimization, warm-started across iterations, with the final
/// controller taken from the best feasible parameters.
SynthesisReport sobsyn(const PlantEvaluator& plant, const SynthesisConfig& config);
SynthesisReport sobsyn(const PHPlant& plant, const SynthesisConfig& config);

}  // namespace phsyn
