#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Eigenvalues>

#include "odeql/types.hpp"

namespace odeql {

inline constexpr std::uint64_t kPowerIterationSeed = 0xC0FFEE;
inline constexpr int kPowerIterationMaxIter = 10000;
inline constexpr double kExpTolerance = 1e-13;

/// Complex standard normal vector (unit variance per component pair).
Vector random_complex_normal(Eigen::Index n, std::mt19937_64& rng);

struct PowerIterationResult {
  double eigenvalue = 0.0;  // dominant eigenvalue of the Hermitian PSD operator
  double residual = 0.0;    // ||B v - mu v|| for the returned unit vector
  int iterations = 0;
  Vector vector;
};

/// Power iteration for the dominant eigenvalue of a Hermitian positive
/// semidefinite operator given only through its action `apply(v) -> B v`.
///
/// Stops once ||B v - mu v|| <= tol * mu, where mu is the Rayleigh quotient.
/// The start vector is drawn from a fixed seed so estimates are reproducible.
/// Throws ConvergenceError with the last iterate after `max_iter` steps.
template <class Apply>
PowerIterationResult power_iteration(Apply&& apply, Eigen::Index n, double tol,
                                     int max_iter = kPowerIterationMaxIter,
                                     std::uint64_t seed = kPowerIterationSeed) {
  if (n <= 0) throw DimensionError("power_iteration: empty operator");
  if (!(tol > 0.0)) throw DomainError("power_iteration: tolerance must be positive");
  std::mt19937_64 rng(seed);
  Vector v = random_complex_normal(n, rng);
  v.normalize();
  PowerIterationResult out;
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = apply(v);
    const double mu = v.dot(w).real();
    const double wn = w.norm();
    if (!std::isfinite(wn)) throw ConvergenceError("power_iteration: non-finite iterate", v, wn);
    if (wn == 0.0) {
      out.eigenvalue = 0.0;
      out.residual = 0.0;
      out.iterations = it;
      out.vector = v;
      return out;
    }
    const double r = (w - mu * v).norm();
    out.eigenvalue = mu;
    out.residual = r;
    out.iterations = it;
    if (r <= tol * mu) {
      out.vector = v;
      return out;
    }
    v = w / wn;
  }
  throw ConvergenceError("power_iteration: no convergence after " + std::to_string(max_iter) +
                             " iterations (relative residual " +
                             std::to_string(out.residual / out.eigenvalue) + ")",
                         v, out.residual);
}

/// Lanczos iteration with full reorthogonalization and explicit restarts
/// from the best Ritz vector. Same start vector, stopping rule and operator
/// application budget as power_iteration; converges far faster when the top
/// of the spectrum is clustered.
template <class Apply>
PowerIterationResult lanczos_largest(Apply&& apply, Eigen::Index n, double tol,
                                     int max_apply = kPowerIterationMaxIter,
                                     std::uint64_t seed = kPowerIterationSeed,
                                     Eigen::Index cycle = 64) {
  if (n <= 0) throw DimensionError("lanczos_largest: empty operator");
  if (!(tol > 0.0)) throw DomainError("lanczos_largest: tolerance must be positive");
  std::mt19937_64 rng(seed);
  Vector start = random_complex_normal(n, rng);
  start.normalize();
  const Eigen::Index dim = std::min(n, cycle);
  PowerIterationResult out;
  int applied = 0;
  while (applied < max_apply) {
    DenseMatrix q(n, dim + 1);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
    q.col(0) = start;
    Eigen::Index used = 0;
    for (Eigen::Index j = 0; j < dim && applied < max_apply; ++j) {
      Vector w = apply(Vector(q.col(j)));
      ++applied;
      if (!w.allFinite()) throw ConvergenceError("lanczos_largest: non-finite iterate", start, 0.0);
      alpha[j] = q.col(j).dot(w).real();
      for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).adjoint() * w);
      beta[j] = w.norm();
      used = j + 1;
      if (beta[j] <= 1e-14 * std::max(1.0, std::abs(alpha[j]))) break;
      q.col(j + 1) = w / beta[j];
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
    for (Eigen::Index j = 0; j < used; ++j) {
      t(j, j) = alpha[j];
      if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const Eigen::VectorXd y = es.eigenvectors().col(used - 1);
    start = q.leftCols(used) * y.cast<Complex>();
    start.normalize();
    if (applied >= max_apply) break;
    const Vector w = apply(start);
    ++applied;
    const double mu = start.dot(w).real();
    out.eigenvalue = mu;
    out.residual = (w - mu * start).norm();
    out.iterations = applied;
    if (w.norm() == 0.0 || out.residual <= tol * mu) {
      out.eigenvalue = std::max(mu, 0.0);
      out.vector = start;
      return out;
    }
  }
  throw ConvergenceError("lanczos_largest: no convergence after " + std::to_string(max_apply) +
                             " operator applications",
                         start, out.residual);
}

/// power_iteration, falling back to lanczos_largest only when the plain
/// iteration exhausts its budget.
template <class Apply>
PowerIterationResult dominant_eigenpair(Apply&& apply, Eigen::Index n, double tol) {
  try {
    return power_iteration(apply, n, tol);
  } catch (const ConvergenceError&) {
    return lanczos_largest(apply, n, tol);
  }
}

/// Largest singular value via power iteration on M^H M.
/// `tol` must lie in (0, 1e-2].
double spectral_norm(const SparseMatrix& m, double tol = 1e-10);
double spectral_norm(const DenseMatrix& m, double tol = 1e-10);

/// Cheap upper bound sqrt(||M||_1 ||M||_inf) on the spectral norm.
double spectral_norm_upper_bound(const SparseMatrix& m);
double spectral_norm_upper_bound(const DenseMatrix& m);

/// e^{At} v by Taylor series with scaling: the interval is cut into s
/// substeps with ||A t / s|| <= 1 and each substep's series is summed to
/// machine precision. Throws AccuracyError when the substep count needed
/// would let accumulated rounding exceed `tol`.
Vector exp_action(const DenseMatrix& a, double t, const Vector& v, double tol = kExpTolerance);
Vector exp_action(const SparseMatrix& a, double t, const Vector& v, double tol = kExpTolerance);

/// Diagonalizable test problem dx/dt = A x + b with its eigendecomposition.
class Instance {
 public:
  /// Forms A = V diag(eigenvalues) V_inv and validates all invariants.
  static Instance from_eigendecomposition(DenseMatrix v, DenseMatrix v_inv, Vector eigenvalues,
                                          Vector b, Vector x_in, double kappa_v);

  /// Uses `a` verbatim (e.g. an exactly sparse generator); V, V_inv and the
  /// eigenvalues must reproduce it to 1e-10 relative.
  static Instance from_matrix(DenseMatrix a, DenseMatrix v, DenseMatrix v_inv, Vector eigenvalues,
                              Vector b, Vector x_in, double kappa_v);

  Eigen::Index dim() const { return a_.rows(); }
  const DenseMatrix& a() const { return a_; }
  const SparseMatrix& a_sparse() const { return a_sparse_; }
  const DenseMatrix& v() const { return v_; }
  const DenseMatrix& v_inv() const { return v_inv_; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Vector& b() const { return b_; }
  const Vector& x_in() const { return x_in_; }
  double kappa_v() const { return kappa_v_; }
  /// Power-iteration estimate of ||A|| (tolerance 1e-10).
  double norm_a() const { return norm_a_; }

 private:
  Instance() = default;
  void validate() const;

  DenseMatrix a_;
  SparseMatrix a_sparse_;
  DenseMatrix v_;
  DenseMatrix v_inv_;
  Vector eigenvalues_;
  Vector b_;
  Vector x_in_;
  double kappa_v_ = 1.0;
  double norm_a_ = 0.0;
};

/// Exact solution x(t) = e^{At} x_in + t phi_1(At) b, evaluated through the
/// augmented generator [[A, b], [0, 0]] acting on (x_in, 1) so that A may be
/// singular. `tol` must lie in (0, 1e-6].
Vector reference_solution(const DenseMatrix& a, const Vector& b, const Vector& x_in, double t,
                          double tol = kExpTolerance);
Vector reference_solution(const Instance& inst, double t, double tol = kExpTolerance);

/// Condition number ||M|| ||M^-1|| of a small dense matrix via SVD.
double dense_condition_number(const DenseMatrix& m);

/// Natural log of n! through lgamma.
inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace odeql
