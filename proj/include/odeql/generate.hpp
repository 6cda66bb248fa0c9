#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "odeql/numerics.hpp"

namespace odeql {

enum class EigenProfile { kUniformHalfDisk, kBoundary, kPureImaginary, kScalar };
enum class BMode { kZero, kRandom };

/// Test-instance recipe. Dense mode (no sparsity) builds V with condition
/// number exactly `kappa`; sparse mode fixes at most `sparsity` nonzeros per
/// row and column of A and measures kappa_V instead. The modes are exclusive.
struct GenSpec {
  Eigen::Index n = 4;
  double kappa = 1.0;
  EigenProfile profile = EigenProfile::kUniformHalfDisk;
  Complex lambda{-1.0, 0.0};  // used by kScalar
  std::optional<int> sparsity;
  BMode b_mode = BMode::kRandom;
  std::uint64_t seed = 1;
  bool normalize = true;  // rescale so ||A|| <= 1

  /// Throws ParameterError when the recipe cannot be met.
  void validate() const;
};

/// Parses "N=4,kappa=3,profile=boundary,b=zero,seed=7,s=3,lambda=-1+0.5i,normalize=0".
/// Unset keys keep their defaults; `default_seed` fills in a missing seed.
GenSpec parse_gen_spec(const std::string& text, std::uint64_t default_seed = 1);
std::string to_string(const GenSpec& spec);

std::string to_string(EigenProfile p);
EigenProfile parse_profile(const std::string& s);

/// Accepts "-1", "0.5i", "-1+0.5i", "-1-2e-3i".
Complex parse_complex(const std::string& s);

/// x_in is a random unit vector; b is zero or a random unit vector.
Instance generate(const GenSpec& spec);

/// Haar-distributed unitary by QR of a complex Gaussian with phase fix.
DenseMatrix random_unitary(Eigen::Index n, std::mt19937_64& rng);

/// Diagonalizes A with a dense eigensolver and measures kappa_V. Eigenvector
/// columns are normalized to unit length.
Instance instance_from_matrix(const DenseMatrix& a, const Vector& b, const Vector& x_in);

}  // namespace odeql
