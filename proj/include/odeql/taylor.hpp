#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "odeql/types.hpp"

namespace odeql {

// Truncated Taylor polynomials of exp and phi_1 = (e^z - 1)/z, all evaluated
// by Horner's scheme from the highest term down. The encoder keeps |z| <= 1,
// where every term decays and plain summation is accurate.

/// T_k(z) = sum_{j=0}^{k} z^j / j!
template <typename Scalar>
Scalar truncated_exp(const Scalar& z, int k) {
  if (k < 0) throw DomainError("truncated_exp: k must be nonnegative");
  Scalar acc(1);
  for (int j = k; j >= 1; --j) acc = Scalar(1) + z * acc / static_cast<double>(j);
  return acc;
}

/// S_k(z) = sum_{j=1}^{k} z^{j-1} / j!
template <typename Scalar>
Scalar truncated_phi(const Scalar& z, int k) {
  if (k < 1) throw DomainError("truncated_phi: k must be at least 1");
  Scalar acc(1);
  for (int j = k; j >= 2; --j) acc = Scalar(1) + z * acc / static_cast<double>(j);
  return acc;
}

/// T_{b,k}(z) = sum_{j=b}^{k} b! z^{j-b} / j!; T_{0,k} = T_k and T_{k,k} = 1.
template <typename Scalar>
Scalar tail_poly(const Scalar& z, int b, int k) {
  if (b < 0 || b > k) throw DomainError("tail_poly: requires 0 <= b <= k");
  Scalar acc(1);
  for (int j = k; j >= b + 1; --j) acc = Scalar(1) + z * acc / static_cast<double>(j);
  return acc;
}

enum class PolyKind { kExp, kPhi };

/// T_k(Ah) v or S_k(Ah) v using only matrix-vector products with A.
template <class Matrix>
Vector poly_action(const Matrix& a, double h, const Vector& v, PolyKind kind, int k) {
  if (a.rows() != a.cols() || a.cols() != v.size()) {
    throw DimensionError("poly_action: dimension mismatch");
  }
  const int lowest = kind == PolyKind::kExp ? 1 : 2;
  if (kind == PolyKind::kExp && k < 0) throw DomainError("poly_action: k must be nonnegative");
  if (kind == PolyKind::kPhi && k < 1) throw DomainError("poly_action: k must be at least 1");
  Vector acc = v;
  Vector av(v.size());
  for (int j = k; j >= lowest; --j) {
    av.noalias() = a * acc;
    acc = v + av * (h / static_cast<double>(j));
  }
  return acc;
}

/// phi_1(z) = (e^z - 1)/z with a cancellation-free complex expm1 and the
/// series 1 + z/2 + z^2/6 once |z| < 1e-8.
Complex phi1(Complex z);

/// sqrt(1.04), the magnitude bound on T_{b,k} over the closed unit half-disk.
double tail_poly_bound();

/// |T_{b,k}(z)| <= sqrt(1.04). The bound is only claimed for k >= 5, so
/// smaller k is rejected with DomainError.
bool tail_bound_holds(Complex z, int b, int k, double slack = 1e-12);

struct BoundSlack {
  std::string name;
  double worst_slack = 0.0;  // min over samples of (bound - observed)
  // max over samples of observed / (bound + 1e-12); the allowance keeps
  // remainders below double resolution at large k from reading as violations
  double worst_ratio = 0.0;
  double observed_at_worst_ratio = 0.0;
  double bound_at_worst_ratio = 0.0;
  Complex argmax_z{0.0, 0.0};
  int argmax_k = -1;
  int argmax_b = -1;
  std::size_t checks = 0;
  std::size_t violations = 0;
};

struct RemainderReport {
  std::size_t samples = 0;
  int k_lo = 0;
  int k_hi = 0;
  std::uint64_t seed = 0;
  std::vector<BoundSlack> bounds;
  std::vector<std::string> failures;  // "(z, k, b)" descriptions, capped
  bool ok() const { return failures.empty(); }
};

/// Draws `samples` points uniformly by area from {|z| <= 1, Re z <= 0}, plus
/// the fixed points {0, -1, i, -i, (-1+i)/sqrt 2}, and checks for each k in
/// [k_lo, k_hi]:
///   |T_k(z) - e^z| <= 1/(k+1)!,  |T_k(z)| <= 1 + 1/(k+1)!,
///   |S_k(z) - phi_1(z)| <= 1/(k+1)!,
/// and, for k >= 5 and all 0 <= b <= k, |T_{b,k}(z)| <= sqrt(1.04).
/// A check fails when its slack drops below -1e-12.
RemainderReport verify_remainder_bounds(std::size_t samples, int k_lo, int k_hi,
                                        std::uint64_t seed);

/// Uniform-by-area point of the closed unit half-disk Re z <= 0.
template <class Rng>
Complex sample_half_disk(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = std::sqrt(unit(rng));
  const double theta = std::numbers::pi / 2.0 + std::numbers::pi * unit(rng);
  Complex z = std::polar(r, theta);
  // cos(pi/2) evaluates to ~6e-17; clamp so the sample stays in the closed half-plane.
  if (z.real() > 0.0) z = Complex(0.0, z.imag());
  return z;
}

}  // namespace odeql
