#pragma once

#include <optional>

#include "odeql/types.hpp"

namespace odeql {

/// Step count m, truncation order k, padding p and step size h.
struct TaylorParams {
  int m = 1;
  int k = 1;
  int p = 1;
  double h = 1.0;

  /// Highest block index; the system has d + 1 block rows.
  int d() const { return m * (k + 1) + p; }
  Eigen::Index blocks() const { return d() + 1; }

  /// Throws ParameterError unless m, k, p >= 1 and h > 0 is finite.
  void validate() const;

  /// k >= 5 and (k+1)! >= 2m, the hypotheses shared by the bound suites.
  bool bound_hypotheses_hold() const;
};

/// Block address (i, j): i in 0..m, j in 0..k for i < m and 0..p for i = m.
struct BlockIndex {
  int i = 0;
  int j = 0;

  friend bool operator==(const BlockIndex&, const BlockIndex&) = default;
};

int flatten(const BlockIndex& idx, const TaylorParams& params);
BlockIndex unflatten(int flat, const TaylorParams& params);

/// Flat indices {m(k+1), ..., d} that hold the final-time state.
bool in_success_set(int flat, const TaylorParams& params);

struct EncodedSystem {
  SparseMatrix matrix;
  Vector rhs;
  TaylorParams params;
  Eigen::Index n = 0;  // block size
};

/// Relative slack allowed on ||A h|| <= 1, since ||A|| is itself estimated.
inline constexpr double kStepNormTolerance = 1e-9;

/// Throws ParameterError when ||A|| h exceeds 1 + kStepNormTolerance. A norm
/// estimate may be passed in; otherwise one is computed.
void check_step_norm(const SparseMatrix& a, double h, std::optional<double> norm_a = {});

/// C_{m,k,p}(Ah): unit block diagonal, -(Ah)/j on the Taylor subdiagonal,
/// -I collector rows summing each step, and -I padding copies.
/// Assembled directly in compressed row-major form.
SparseMatrix build_matrix(const SparseMatrix& a, const TaylorParams& params,
                          std::optional<double> norm_a = {});

/// Closed-form nonzero count of build_matrix.
Eigen::Index encoded_nonzeros(Eigen::Index nnz_a, Eigen::Index n, const TaylorParams& params);

/// Block 0 = x_in; blocks i(k+1)+1 = h b for 0 <= i < m; zero elsewhere.
Vector build_rhs(const Vector& x_in, const Vector& b, const TaylorParams& params);

EncodedSystem encode(const SparseMatrix& a, const Vector& x_in, const Vector& b,
                     const TaylorParams& params, std::optional<double> norm_a = {});

/// C = C1 + C2 + C3: identity, collector rows, and the subdiagonal
/// (Taylor plus padding) part.
struct MatrixComponents {
  SparseMatrix identity;
  SparseMatrix collectors;
  SparseMatrix subdiagonal;
};
MatrixComponents build_components(const SparseMatrix& a, const TaylorParams& params);

/// Amplitude-level emulation of preparing the normalized right-hand side from
/// the two norms and the two unit states: a rotation on index states {0, 1},
/// the controlled preparations of x_in and b, then spreading |1> uniformly
/// over the m blocks i(k+1)+1. Returns the normalized (d+1)N state.
Vector simulate_state_prep(double x_in_norm, double b_norm, const Vector& x_in_state,
                           const Vector& b_state, const TaylorParams& params);

/// Unitary U with U e_0 = target for a unit vector target (a phased Householder
/// reflection).
DenseMatrix preparation_unitary(const Vector& target);

}  // namespace odeql
