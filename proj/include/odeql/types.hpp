#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace odeql {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
// Row-major so that assembly and forward substitution walk rows in storage order.
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

// Error hierarchy. The CLI maps HypothesisError and ParameterError to exit 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// A bound's hypotheses are not met, so the bound is not claimed.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class AccuracyError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Vector last_iterate, double residual)
      : Error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const Vector& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Vector last_iterate_;
  double residual_;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline Vector normalized(const Vector& v) { return v / v.norm(); }

}  // namespace odeql
