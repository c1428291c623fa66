#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "phsyn/ph_core.hpp"
#include "phsyn/types.hpp"

namespace phsyn {

/// Frequency-domain evaluation of the four plant blocks at s = i*omega.
struct PlantEvaluation {
    double omega = 0.0;
    ComplexMatrix P11;  // p1 x m1
    ComplexMatrix P12;  // p1 x m
    ComplexMatrix P21;  // p2 x m1
    ComplexMatrix P22;  // p2 x m
};

/// Assembled two-port plant realization
///   dx = A x + B1 w + B2 u,  z = C1 x + D11 w + D12 u,  y = C2 x + D21 w + D22 u.
struct PlantSS {
    Matrix A, B1, B2, C1, C2, D11, D12, D21, D22;

    static PlantSS from_ph(const PHPlant& plant);

    int states() const { return static_cast<int>(A.rows()); }
    int dist_dim() const { return static_cast<int>(B1.cols()); }
    int ctrl_dim() const { return static_cast<int>(B2.cols()); }
    int perf_dim() const { return static_cast<int>(C1.rows()); }
    int meas_dim() const { return static_cast<int>(C2.rows()); }
};

/// Plant known only through transfer-function samples on a fixed grid.
struct SampledPlant {
    std::vector<PlantEvaluation> points;  // sorted ascending by omega
    void check() const;
    std::vector<double> grid() const;
};

/// C (sI - A)^{-1} B + D via one factored complex solve.
ComplexMatrix eval_transfer(const StateSpace& ss, Complex s);

/// One-shot evaluation of all four plant blocks with a single factorization.
PlantEvaluation eval_plant(const PHPlant& plant, Complex s);

/// Frequency-response engine for a plant. State-space-backed evaluators
/// reduce A to Hessenberg form once and then factor (i*omega*I - H) per
/// distinct frequency in O(n^2); evaluations are cached keyed by omega and
/// the cache is safe under concurrent insert-or-get. Sample-backed
/// evaluators serve only the frequencies present in the file (no
/// interpolation).
class PlantEvaluator {
  public:
    explicit PlantEvaluator(const PHPlant& plant);
    explicit PlantEvaluator(SampledPlant samples);

    PlantEvaluation at(double omega) const;

    int dist_dim() const { return m1_; }
    int perf_dim() const { return p1_; }
    int port_dim() const { return m_; }
    int state_dim() const { return n_; }

    bool is_sampled() const { return sampled_.has_value(); }
    /// Grid of admissible frequencies for sampled plants.
    const std::vector<double>& fixed_grid() const;

    const PlantSS* statespace() const { return ss_ ? &*ss_ : nullptr; }

    /// Number of frequency-point factorizations performed so far (cache
    /// misses on the state-space path).
    long factorization_count() const { return fact_count_.load(); }

  private:
    PlantEvaluation evaluate(double omega) const;

    std::optional<PlantSS> ss_;
    std::optional<SampledPlant> sampled_;
    std::vector<double> grid_;

    // Hessenberg data: A = U H U^T, Bt = U^T [B1 B2], Ct = [C1; C2] U.
    Matrix hess_u_, hess_h_, bt_, ct_, dall_;

    int n_ = 0, m1_ = 0, p1_ = 0, m_ = 0;
    mutable std::mutex mutex_;
    mutable std::map<double, PlantEvaluation> cache_;
    mutable std::atomic<long> fact_count_{0};
};

/// Repeated-evaluation engine for a fixed realization: one Hessenberg
/// reduction up front, then each frequency response costs O(n^2).
class StateSpaceEvaluator {
  public:
    explicit StateSpaceEvaluator(StateSpace ss);
    ComplexMatrix at(double omega) const;

  private:
    StateSpace ss_;
    Matrix hess_u_, hess_h_, bt_, ct_;
};

/// Lower linear fractional transformation
///   P11 + s*P12 K (I - s*P22 K)^{-1} P21,  s = +1 / -1 per feedback sign.
ComplexMatrix lower_lft(const PlantEvaluation& pe, const ComplexMatrix& K,
                        FeedbackSign sign);

/// Closed-loop system matrix of the plant u->y channel with the controller,
/// under the chosen feedback sign.
Matrix closed_loop_matrix(const StateSpace& plant_uy, const StateSpace& ctrl,
                          FeedbackSign sign);

/// Full closed-loop realization from disturbance w to performance z.
StateSpace closed_loop_system(const PlantSS& plant, const StateSpace& ctrl,
                              FeedbackSign sign);

/// Dissipative pencil s*E - M of the negative-feedback interconnection of a
/// pH plant with a pH controller; E = diag(I_n, I_k, 0, 0). Its finite
/// eigenvalues coincide with the closed-loop matrix eigenvalues and the
/// remaining 2m eigenvalues lie at infinity.
struct MatrixPencil {
    Matrix E;
    Matrix M;
};

MatrixPencil closed_loop_pencil(const PHPlant& plant, const PHForm& ctrl);
MatrixPencil closed_loop_pencil(const PHForm& plant_ph, const PHForm& ctrl);

struct PencilEigenvalues {
    std::vector<Complex> finite;
    int infinite_count = 0;
};

PencilEigenvalues pencil_eigenvalues(const MatrixPencil& pencil);

/// Fixed-step RK4 with zero-order-hold input. u holds one column per time
/// step; the trajectory has u.cols() samples at t_j = j*dt.
struct Trajectory {
    Matrix x;  // n x nsteps
    Matrix y;  // p x nsteps
    double dt = 0.0;
};

Trajectory simulate_lti(const StateSpace& ss, const Matrix& u, const Vector& x0,
                        double dt);

/// Closed-loop frequency response H(i*omega) from a cached plant evaluator
/// and a controller realization.
ComplexMatrix closed_loop_response(const PlantEvaluator& plant,
                                   const StateSpace& ctrl, FeedbackSign sign,
                                   double omega);

}  // namespace phsyn
