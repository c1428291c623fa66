#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace phsyn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Generic (A, B, C, D) realization; the common currency of evaluation,
/// norms and passivity checks.
struct StateSpace {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    int states() const { return static_cast<int>(A.rows()); }
    int inputs() const { return static_cast<int>(B.cols()); }
    int outputs() const { return static_cast<int>(C.rows()); }

    /// Throws DimensionError if the four blocks are inconsistent.
    void check_dims() const;
};

/// Sign convention of the plant/controller interconnection. Positive couples
/// u = y_K; negative couples u = -y_K (the convention used for passive
/// interconnection, where two pH systems yield a Lyapunov stable loop).
enum class FeedbackSign { Positive, Negative };

struct ToleranceSet {
    double structural = 1e-12;  // skew-symmetry, relative to matrix scale
    double psd = 1e-8;          // min eig of W, relative to ||W||_2
    double pd = 1e-10;          // min eig of Q, absolute
    double round_trip = 1e-8;   // theta <-> controller reconstruction
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

/// (sI - A) singular at the requested evaluation point.
class PoleAtSampleError : public Error {
  public:
    PoleAtSampleError(const std::string& msg, Complex s) : Error(msg), s_(s) {}
    Complex at() const { return s_; }

  private:
    Complex s_;
};

/// Interconnection not well-posed (I - P22 K singular, or the 2x2
/// well-posedness block matrix singular).
class IllPosedError : public Error {
  public:
    explicit IllPosedError(const std::string& msg, Complex s = {0.0, 0.0})
        : Error(msg), s_(s) {}
    Complex at() const { return s_; }

  private:
    Complex s_;
};

class InstabilityError : public Error {
  public:
    using Error::Error;
};

/// A passivity/positive-definiteness certificate could not be produced.
class CertificateError : public Error {
  public:
    using Error::Error;
};

class InfeasibleError : public Error {
  public:
    using Error::Error;
};

class SchemaError : public Error {
  public:
    using Error::Error;
};

}  // namespace phsyn
