#pragma once

#include <optional>
#include <vector>

#include "odeql/encoder.hpp"

namespace odeql {

/// Solution of the encoded system stored as one column per block.
class BlockSolution {
 public:
  BlockSolution(TaylorParams params, DenseMatrix blocks);

  const TaylorParams& params() const { return params_; }
  Eigen::Index n() const { return blocks_.rows(); }

  /// Block x_{i,j}.
  auto block(const BlockIndex& idx) const { return blocks_.col(flatten(idx, params_)); }
  auto block(int flat) const { return blocks_.col(flat); }
  const DenseMatrix& blocks() const { return blocks_; }

  /// Concatenated (d+1)N vector in flat order.
  Vector flat() const;
  double norm() const { return blocks_.norm(); }

 private:
  TaylorParams params_;
  DenseMatrix blocks_;
};

/// Solves C_{m,k,p}(Ah) x = rhs by the defining recurrences, without
/// assembling C:
///   x_{0,0} = x_in, x_{i,1} = Ah x_{i,0} + h b, x_{i,j} = (Ah/j) x_{i,j-1},
///   x_{i+1,0} = sum_j x_{i,j}, x_{m,j} = x_{m,j-1}.
/// Requires ||A h|| <= 1 (checked as in build_matrix).
BlockSolution forward_substitute(const SparseMatrix& a, const TaylorParams& params,
                                 const Vector& x_in, const Vector& b,
                                 std::optional<double> norm_a = {});

/// Streaming variant for large sweeps: only the step states x_{i,0}
/// (i = 0..m) and the squared norm of the full solution are kept.
struct StepHistory {
  TaylorParams params;
  std::vector<Vector> step_states;  // x_{i,0}; the padding blocks all equal step_states[m]
  double total_squared_norm = 0.0;
  double final_squared_norm_fraction() const;  // (p+1)||x_{m,0}||^2 / ||x||^2
};

StepHistory forward_history(const SparseMatrix& a, const TaylorParams& params, const Vector& x_in,
                            const Vector& b, std::optional<double> norm_a = {});

/// Generic sparse forward substitution on the assembled lower-triangular
/// matrix. Throws IntegrityError on entries above the diagonal or a missing
/// or zero diagonal.
Vector lower_solve(const SparseMatrix& c, const Vector& rhs);
Vector generic_solve(const EncodedSystem& system);

/// Solves C^H z = y by back substitution (column sweep over the row-major C).
Vector adjoint_solve(const SparseMatrix& c, const Vector& y);
Vector adjoint_solve(const EncodedSystem& system, const Vector& y);

/// ||C x - rhs|| / ||rhs||
double residual(const EncodedSystem& system, const Vector& x);

}  // namespace odeql
