#include "odeql/encoder.hpp"

#include <cmath>
#include <vector>

#include "odeql/numerics.hpp"

namespace odeql {

void TaylorParams::validate() const {
  if (m < 1 || k < 1 || p < 1) throw ParameterError("TaylorParams: m, k, p must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("TaylorParams: h must be positive");
}

bool TaylorParams::bound_hypotheses_hold() const {
  return k >= 5 && log_factorial(k + 1) >= std::log(2.0 * m);
}

int flatten(const BlockIndex& idx, const TaylorParams& params) {
  const bool ok = idx.i >= 0 && idx.j >= 0 &&
                  ((idx.i < params.m && idx.j <= params.k) || (idx.i == params.m && idx.j <= params.p));
  if (!ok) throw DomainError("flatten: block index out of range");
  return idx.i * (params.k + 1) + idx.j;
}

BlockIndex unflatten(int flat, const TaylorParams& params) {
  if (flat < 0 || flat > params.d()) throw DomainError("unflatten: flat index out of range");
  const int tail = params.m * (params.k + 1);
  if (flat >= tail) return {params.m, flat - tail};
  return {flat / (params.k + 1), flat % (params.k + 1)};
}

bool in_success_set(int flat, const TaylorParams& params) {
  return flat >= params.m * (params.k + 1) && flat <= params.d();
}

void check_step_norm(const SparseMatrix& a, double h, std::optional<double> norm_a) {
  const double norm = norm_a ? *norm_a : spectral_norm(a, 1e-10);
  if (norm * h > 1.0 + kStepNormTolerance) {
    throw ParameterError("||A h|| = " + std::to_string(norm * h) +
                         " exceeds 1; shrink h to at most 1/||A||");
  }
}

Eigen::Index encoded_nonzeros(Eigen::Index nnz_a, Eigen::Index n, const TaylorParams& params) {
  const Eigen::Index m = params.m;
  const Eigen::Index k = params.k;
  const Eigen::Index p = params.p;
  return (params.d() + 1) * n + m * k * nnz_a + m * (k + 1) * n + p * n;
}

SparseMatrix build_matrix(const SparseMatrix& a_in, const TaylorParams& params,
                          std::optional<double> norm_a) {
  params.validate();
  if (a_in.rows() != a_in.cols() || a_in.rows() == 0) {
    throw DimensionError("build_matrix: A must be square and nonempty");
  }
  check_step_norm(a_in, params.h, norm_a);

  SparseMatrix a = a_in;
  a.makeCompressed();
  const Eigen::Index n = a.rows();
  const int k = params.k;
  const int m = params.m;
  const int d = params.d();
  const Eigen::Index dim = (d + 1) * n;
  const int* a_outer = a.outerIndexPtr();
  const int* a_inner = a.innerIndexPtr();
  const Complex* a_val = a.valuePtr();
  const Eigen::Index nnz_a = a.nonZeros();

  // -(A h)/j, one scaled copy of A's value array per j.
  std::vector<std::vector<Complex>> scaled(k + 1);
  for (int j = 1; j <= k; ++j) {
    scaled[j].resize(nnz_a);
    for (Eigen::Index e = 0; e < nnz_a; ++e) scaled[j][e] = -(a_val[e] * params.h) / double(j);
  }

  SparseMatrix c(dim, dim);
  c.resizeNonZeros(encoded_nonzeros(nnz_a, n, params));
  int* outer = c.outerIndexPtr();
  int* inner = c.innerIndexPtr();
  Complex* val = c.valuePtr();
  Eigen::Index pos = 0;
  auto put = [&](Eigen::Index col, Complex v) {
    inner[pos] = static_cast<int>(col);
    val[pos] = v;
    ++pos;
  };

  const int tail = m * (k + 1);
  for (int l = 0; l <= d; ++l) {
    const int i = l < tail ? l / (k + 1) : m;
    const int j = l < tail ? l % (k + 1) : l - tail;
    for (Eigen::Index r = 0; r < n; ++r) {
      outer[l * n + r] = static_cast<int>(pos);
      if (i < m && j >= 1) {
        // Taylor row: x_{i,j} - (Ah/j) x_{i,j-1}
        const Eigen::Index base = Eigen::Index(l - 1) * n;
        for (int e = a_outer[r]; e < a_outer[r + 1]; ++e) put(base + a_inner[e], scaled[j][e]);
      } else if (l > 0 && j == 0) {
        // Collector row: x_{i,0} - sum_q x_{i-1,q}
        const Eigen::Index first = Eigen::Index(l - (k + 1));
        for (int q = 0; q <= k; ++q) put((first + q) * n + r, Complex(-1.0, 0.0));
      } else if (i == m && j >= 1) {
        // Padding row: x_{m,j} - x_{m,j-1}
        put(Eigen::Index(l - 1) * n + r, Complex(-1.0, 0.0));
      }
      put(Eigen::Index(l) * n + r, Complex(1.0, 0.0));
    }
  }
  outer[dim] = static_cast<int>(pos);
  if (pos != c.nonZeros()) throw IntegrityError("build_matrix: nonzero count mismatch");
  return c;
}

Vector build_rhs(const Vector& x_in, const Vector& b, const TaylorParams& params) {
  params.validate();
  if (x_in.size() != b.size() || x_in.size() == 0) {
    throw DimensionError("build_rhs: x_in and b must have equal nonzero length");
  }
  const Eigen::Index n = x_in.size();
  Vector rhs = Vector::Zero(params.blocks() * n);
  rhs.head(n) = x_in;
  const Vector hb = params.h * b;
  for (int i = 0; i < params.m; ++i) rhs.segment(Eigen::Index(i * (params.k + 1) + 1) * n, n) = hb;
  return rhs;
}

EncodedSystem encode(const SparseMatrix& a, const Vector& x_in, const Vector& b,
                     const TaylorParams& params, std::optional<double> norm_a) {
  if (x_in.size() != a.rows()) throw DimensionError("encode: x_in length does not match A");
  EncodedSystem sys;
  sys.matrix = build_matrix(a, params, norm_a);
  sys.rhs = build_rhs(x_in, b, params);
  sys.params = params;
  sys.n = a.rows();
  return sys;
}

MatrixComponents build_components(const SparseMatrix& a, const TaylorParams& params) {
  params.validate();
  const Eigen::Index n = a.rows();
  const int k = params.k;
  const int m = params.m;
  const int d = params.d();
  const Eigen::Index dim = (d + 1) * n;
  using Triplet = Eigen::Triplet<Complex>;
  std::vector<Triplet> t1, t2, t3;
  for (Eigen::Index r = 0; r < dim; ++r) t1.emplace_back(r, r, 1.0);
  for (int i = 0; i < m; ++i) {
    const int row = (i + 1) * (k + 1);
    for (int j = 0; j <= k; ++j) {
      const int col = i * (k + 1) + j;
      for (Eigen::Index r = 0; r < n; ++r) t2.emplace_back(row * n + r, col * n + r, -1.0);
    }
    for (int j = 1; j <= k; ++j) {
      const int row_b = i * (k + 1) + j;
      for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
          t3.emplace_back(row_b * n + it.row(), (row_b - 1) * n + it.col(),
                          -(it.value() * params.h) / double(j));
        }
      }
    }
  }
  for (int j = d - params.p + 1; j <= d; ++j) {
    for (Eigen::Index r = 0; r < n; ++r) t3.emplace_back(j * n + r, (j - 1) * n + r, -1.0);
  }
  MatrixComponents out{SparseMatrix(dim, dim), SparseMatrix(dim, dim), SparseMatrix(dim, dim)};
  out.identity.setFromTriplets(t1.begin(), t1.end());
  out.collectors.setFromTriplets(t2.begin(), t2.end());
  out.subdiagonal.setFromTriplets(t3.begin(), t3.end());
  return out;
}

namespace {

struct Reflector {
  Vector u;
  double u_norm2 = 0.0;
  Complex phase{1.0, 0.0};
};

Reflector make_reflector(const Vector& target) {
  Reflector ref;
  const Complex t0 = target[0];
  ref.phase = std::abs(t0) > 0.0 ? t0 / std::abs(t0) : Complex(1.0, 0.0);
  ref.u = -(std::conj(ref.phase) * target);
  ref.u[0] += 1.0;
  ref.u_norm2 = ref.u.squaredNorm();
  return ref;
}

Vector apply_reflector(const Reflector& ref, const Vector& v) {
  if (ref.u_norm2 == 0.0) return ref.phase * v;
  const Complex coeff = 2.0 * ref.u.dot(v) / ref.u_norm2;
  return ref.phase * (v - coeff * ref.u);
}

void require_unit(const Vector& v, const char* what) {
  if (v.size() == 0 || !v.allFinite() || std::abs(v.norm() - 1.0) > 1e-12) {
    throw DomainError(std::string("simulate_state_prep: ") + what + " must be a unit vector");
  }
}

}  // namespace

DenseMatrix preparation_unitary(const Vector& target) {
  require_unit(target, "target");
  const Reflector ref = make_reflector(target);
  const Eigen::Index n = target.size();
  DenseMatrix u(n, n);
  for (Eigen::Index c = 0; c < n; ++c) u.col(c) = apply_reflector(ref, Vector::Unit(n, c));
  return u;
}

Vector simulate_state_prep(double x_in_norm, double b_norm, const Vector& x_in_state,
                           const Vector& b_state, const TaylorParams& params) {
  params.validate();
  if (!(x_in_norm >= 0.0) || !(b_norm >= 0.0)) {
    throw DomainError("simulate_state_prep: norms must be nonnegative");
  }
  if (x_in_norm == 0.0 && b_norm == 0.0) {
    throw DegeneracyError("simulate_state_prep: x_in and b are both zero");
  }
  if (x_in_state.size() != b_state.size()) throw DimensionError("simulate_state_prep: length mismatch");
  if (x_in_norm > 0.0) require_unit(x_in_state, "x_in_state");
  if (b_norm > 0.0) require_unit(b_state, "b_state");

  const Eigen::Index n = x_in_state.size();
  const int m = params.m;
  const double weight_b = std::sqrt(double(m)) * params.h * b_norm;
  const double norm = std::sqrt(x_in_norm * x_in_norm + m * params.h * params.h * b_norm * b_norm);
  const double c0 = x_in_norm / norm;
  const double c1 = weight_b / norm;

  // Index register ⊗ data register, index-major.
  Vector state = Vector::Zero(params.blocks() * n);
  state[0] = 1.0;

  // Rotation U on index states {0, 1}.
  for (Eigen::Index r = 0; r < n; ++r) {
    const Complex a0 = state[r];
    const Complex a1 = state[n + r];
    state[r] = c0 * a0 - c1 * a1;
    state[n + r] = c1 * a0 + c0 * a1;
  }

  // Controlled preparations: index 0 -> x_in_state, index 1 -> b_state.
  if (c0 > 0.0) state.segment(0, n) = apply_reflector(make_reflector(x_in_state), state.segment(0, n));
  if (c1 > 0.0) state.segment(n, n) = apply_reflector(make_reflector(b_state), state.segment(n, n));

  // Spreader |1> -> m^{-1/2} sum_i |i(k+1)+1>.
  const Vector one = state.segment(n, n);
  state.segment(n, n).setZero();
  const double spread = 1.0 / std::sqrt(double(m));
  for (int i = 0; i < m; ++i) {
    state.segment(Eigen::Index(i * (params.k + 1) + 1) * n, n) += spread * one;
  }
  return state;
}

}  // namespace odeql
