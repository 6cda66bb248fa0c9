#include "odeql/numerics.hpp"

#include <algorithm>
#include <limits>

#include <Eigen/SVD>

namespace odeql {

namespace {

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;
// Substeps are capped so that an estimated 4u relative rounding per substep
// stays inside the requested tolerance.
constexpr double kRoundingPerSubstep = 4.0 * kUnitRoundoff;
constexpr double kMaxSubsteps = 1e7;
constexpr int kMaxSeriesTerms = 80;

template <class M>
double upper_bound_impl(const M& m) {
  // ||M||_2 <= sqrt(||M||_1 ||M||_inf)
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(m.rows());
  Eigen::VectorXd col_sums = Eigen::VectorXd::Zero(m.cols());
  if constexpr (std::is_same_v<M, SparseMatrix>) {
    for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
        const double a = std::abs(it.value());
        row_sums[it.row()] += a;
        col_sums[it.col()] += a;
      }
    }
  } else {
    row_sums = m.cwiseAbs().rowwise().sum();
    col_sums = m.cwiseAbs().colwise().sum().transpose();
  }
  const double r = row_sums.size() ? row_sums.maxCoeff() : 0.0;
  const double c = col_sums.size() ? col_sums.maxCoeff() : 0.0;
  return std::sqrt(r * c);
}

template <class M>
double spectral_norm_impl(const M& m, double tol) {
  if (!(tol > 0.0 && tol <= 1e-2)) throw DomainError("spectral_norm: tol must lie in (0, 1e-2]");
  if (m.rows() == 0 || m.cols() == 0) throw DimensionError("spectral_norm: empty matrix");
  auto gram = [&m](const Vector& v) -> Vector {
    Vector mv = m * v;
    return m.adjoint() * mv;
  };
  const auto res = dominant_eigenpair(gram, m.cols(), tol);
  return std::sqrt(std::max(res.eigenvalue, 0.0));
}

template <class M>
Vector exp_action_impl(const M& a, double t, const Vector& v, double tol) {
  if (a.rows() != a.cols()) throw DimensionError("exp_action: generator must be square");
  if (v.size() != a.cols()) throw DimensionError("exp_action: vector length does not match");
  if (!(tol > 0.0)) throw DomainError("exp_action: tolerance must be positive");
  if (!std::isfinite(t) || !v.allFinite()) throw DomainError("exp_action: non-finite input");
  if (t == 0.0) return v;

  const double scaled = upper_bound_impl(a) * std::abs(t);
  if (!std::isfinite(scaled)) throw DomainError("exp_action: non-finite generator");
  const double substeps = std::max(1.0, std::ceil(scaled));
  if (substeps > kMaxSubsteps || (substeps > 1.0 && substeps * kRoundingPerSubstep > tol)) {
    throw AccuracyError("exp_action: tolerance " + std::to_string(tol) +
                        " not achievable with ||A t|| ~ " + std::to_string(scaled) +
                        " inside the substep budget");
  }
  const auto s = static_cast<long>(substeps);
  const double tau = t / substeps;

  Vector w = v;
  Vector term(v.size());
  Vector next(v.size());
  for (long step = 0; step < s; ++step) {
    term = w;
    Vector sum = w;
    for (int j = 1; j <= kMaxSeriesTerms; ++j) {
      next.noalias() = a * term;
      term = next * (tau / j);
      sum += term;
      const double tn = term.norm();
      if (tn <= kUnitRoundoff * sum.norm()) break;
    }
    w.swap(sum);
  }
  if (!w.allFinite()) throw AccuracyError("exp_action: result overflowed");
  return w;
}

}  // namespace

Vector random_complex_normal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(0.5));
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = dist(rng);
    const double im = dist(rng);
    v[i] = Complex(re, im);
  }
  return v;
}

double spectral_norm(const SparseMatrix& m, double tol) { return spectral_norm_impl(m, tol); }
double spectral_norm(const DenseMatrix& m, double tol) { return spectral_norm_impl(m, tol); }

double spectral_norm_upper_bound(const SparseMatrix& m) { return upper_bound_impl(m); }
double spectral_norm_upper_bound(const DenseMatrix& m) { return upper_bound_impl(m); }

Vector exp_action(const DenseMatrix& a, double t, const Vector& v, double tol) {
  return exp_action_impl(a, t, v, tol);
}

Vector exp_action(const SparseMatrix& a, double t, const Vector& v, double tol) {
  return exp_action_impl(a, t, v, tol);
}

Vector reference_solution(const DenseMatrix& a, const Vector& b, const Vector& x_in, double t,
                          double tol) {
  if (!(tol > 0.0 && tol <= 1e-6)) throw DomainError("reference_solution: tol must lie in (0, 1e-6]");
  if (!(t >= 0.0)) throw DomainError("reference_solution: t must be nonnegative");
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n || x_in.size() != n) {
    throw DimensionError("reference_solution: dimension mismatch");
  }
  DenseMatrix aug = DenseMatrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = a;
  aug.topRightCorner(n, 1) = b;
  Vector z(n + 1);
  z.head(n) = x_in;
  z[n] = 1.0;
  return exp_action(aug, t, z, tol).head(n);
}

Vector reference_solution(const Instance& inst, double t, double tol) {
  return reference_solution(inst.a(), inst.b(), inst.x_in(), t, tol);
}

double dense_condition_number(const DenseMatrix& m) {
  Eigen::JacobiSVD<DenseMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double lo = s[s.size() - 1];
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / lo;
}

Instance Instance::from_eigendecomposition(DenseMatrix v, DenseMatrix v_inv, Vector eigenvalues,
                                           Vector b, Vector x_in, double kappa_v) {
  if (v.rows() != v.cols() || eigenvalues.size() != v.rows()) {
    throw DimensionError("Instance: V must be square and match the eigenvalue count");
  }
  DenseMatrix a = v * eigenvalues.asDiagonal() * v_inv;
  Instance inst;
  inst.a_ = std::move(a);
  inst.v_ = std::move(v);
  inst.v_inv_ = std::move(v_inv);
  inst.eigenvalues_ = std::move(eigenvalues);
  inst.b_ = std::move(b);
  inst.x_in_ = std::move(x_in);
  inst.kappa_v_ = kappa_v;
  inst.validate();
  inst.a_sparse_ = inst.a_.sparseView(0.0, 0.0);
  inst.norm_a_ = spectral_norm(inst.a_, 1e-10);
  return inst;
}

Instance Instance::from_matrix(DenseMatrix a, DenseMatrix v, DenseMatrix v_inv, Vector eigenvalues,
                               Vector b, Vector x_in, double kappa_v) {
  Instance inst;
  inst.a_ = std::move(a);
  inst.v_ = std::move(v);
  inst.v_inv_ = std::move(v_inv);
  inst.eigenvalues_ = std::move(eigenvalues);
  inst.b_ = std::move(b);
  inst.x_in_ = std::move(x_in);
  inst.kappa_v_ = kappa_v;
  inst.validate();
  const DenseMatrix rebuilt = inst.v_ * inst.eigenvalues_.asDiagonal() * inst.v_inv_;
  const double scale = std::max(1.0, inst.a_.cwiseAbs().maxCoeff());
  if ((rebuilt - inst.a_).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw IntegrityError("Instance: V diag(lambda) V^-1 does not reproduce A");
  }
  inst.a_sparse_ = inst.a_.sparseView(0.0, 0.0);
  inst.norm_a_ = spectral_norm(inst.a_, 1e-10);
  return inst;
}

void Instance::validate() const {
  const Eigen::Index n = a_.rows();
  if (n <= 0 || a_.cols() != n) throw DimensionError("Instance: A must be square and nonempty");
  if (v_.rows() != n || v_.cols() != n || v_inv_.rows() != n || v_inv_.cols() != n ||
      eigenvalues_.size() != n || b_.size() != n || x_in_.size() != n) {
    throw DimensionError("Instance: inconsistent dimensions");
  }
  if (!a_.allFinite() || !v_.allFinite() || !v_inv_.allFinite() || !eigenvalues_.allFinite() ||
      !b_.allFinite() || !x_in_.allFinite()) {
    throw DomainError("Instance: non-finite entries");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (eigenvalues_[i].real() > 0.0) {
      throw DomainError("Instance: eigenvalue with positive real part");
    }
  }
  const double inv_err = (v_ * v_inv_ - DenseMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (inv_err > 1e-12) {
    throw IntegrityError("Instance: ||V V_inv - I||_max = " + std::to_string(inv_err));
  }
  Eigen::JacobiSVD<DenseMatrix> sv(v_);
  Eigen::JacobiSVD<DenseMatrix> si(v_inv_);
  const double measured = sv.singularValues()[0] * si.singularValues()[0];
  if (!(kappa_v_ >= 1.0 - 1e-12) || std::abs(measured - kappa_v_) > 1e-6 * kappa_v_) {
    throw IntegrityError("Instance: kappa_V " + std::to_string(kappa_v_) +
                         " disagrees with ||V|| ||V^-1|| = " + std::to_string(measured));
  }
}

}  // namespace odeql
