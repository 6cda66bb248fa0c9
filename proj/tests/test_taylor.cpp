#include "doctest.h"

#include <cmath>
#include <random>

#include "odeql/numerics.hpp"
#include "odeql/taylor.hpp"

using namespace odeql;

namespace {

// Term-by-term partial sums with explicit factorials, in long double.
std::complex<long double> brute_sum(Complex z, int from, int to, int shift, long double scale) {
  std::complex<long double> acc = 0.0L;
  const std::complex<long double> zz(z.real(), z.imag());
  long double fact = 1.0L;
  for (int j = 1; j <= from; ++j) fact *= j;
  for (int j = from; j <= to; ++j) {
    if (j > from) fact *= j;
    acc += scale * std::pow(zz, j - shift) / fact;
  }
  return acc;
}

Complex to_c(std::complex<long double> z) { return {double(z.real()), double(z.imag())}; }

}  // namespace

TEST_CASE("polynomials match explicit partial sums") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Complex z = sample_half_disk(rng);
    for (int k : {1, 5, 9, 20}) {
      CHECK(std::abs(truncated_exp(z, k) - to_c(brute_sum(z, 0, k, 0, 1.0L))) <= 1e-15);
      CHECK(std::abs(truncated_phi(z, k) - to_c(brute_sum(z, 1, k, 1, 1.0L))) <= 1e-15);
      for (int b = 0; b <= k; b += 3) {
        long double bf = 1.0L;
        for (int j = 2; j <= b; ++j) bf *= j;
        CHECK(std::abs(tail_poly(z, b, k) - to_c(brute_sum(z, b, k, b, bf))) <= 1e-14);
      }
    }
  }
}

TEST_CASE("polynomial identities") {
  const Complex z(-0.3, 0.8);
  CHECK(tail_poly(z, 0, 7) == truncated_exp(z, 7));
  CHECK(tail_poly(z, 7, 7) == Complex(1.0, 0.0));
  CHECK(truncated_exp(z, 0) == Complex(1.0, 0.0));
  CHECK(truncated_phi(z, 1) == Complex(1.0, 0.0));
  // T_k(z) = 1 + z S_k(z)
  CHECK(std::abs(truncated_exp(z, 9) - (1.0 + z * truncated_phi(z, 9))) <= 1e-15);
  CHECK_THROWS_AS(truncated_exp(z, -1), DomainError);
  CHECK_THROWS_AS(truncated_phi(z, 0), DomainError);
  CHECK_THROWS_AS(tail_poly(z, 4, 3), DomainError);
}

TEST_CASE("phi1") {
  CHECK(phi1(Complex(0.0, 0.0)) == Complex(1.0, 0.0));
  for (Complex z : {Complex(-1.0, 0.0), Complex(0.0, 1.0), Complex(-0.4, -0.7), Complex(2.0, 3.0)}) {
    const Complex naive = (std::exp(z) - 1.0) / z;
    CHECK(std::abs(phi1(z) - naive) <= 1e-14 * std::abs(naive));
  }
  // Near zero the naive quotient cancels; compare with the series.
  const Complex tiny(1e-10, -2e-10);
  CHECK(std::abs(phi1(tiny) - (1.0 + tiny / 2.0)) <= 1e-18);
  const Complex small(1e-5, 3e-5);
  const Complex series = 1.0 + small / 2.0 + small * small / 6.0 + small * small * small / 24.0;
  CHECK(std::abs(phi1(small) - series) <= 1e-16);
}

TEST_CASE("poly_action matches the dense matrix polynomial") {
  std::mt19937_64 rng(3);
  DenseMatrix a(4, 4);
  for (Eigen::Index c = 0; c < 4; ++c) a.col(c) = random_complex_normal(4, rng) * 0.3;
  const Vector v = random_complex_normal(4, rng);
  const double h = 0.7;
  const int k = 8;
  DenseMatrix pow = DenseMatrix::Identity(4, 4);
  DenseMatrix t_sum = DenseMatrix::Zero(4, 4);
  DenseMatrix s_sum = DenseMatrix::Zero(4, 4);
  double fact = 1.0;
  for (int j = 0; j <= k; ++j) {
    if (j > 0) fact *= j;
    t_sum += pow / fact;
    if (j + 1 <= k) s_sum += pow / (fact * (j + 1));
    pow = pow * a * h;
  }
  CHECK((poly_action(a, h, v, PolyKind::kExp, k) - t_sum * v).norm() <= 1e-14);
  CHECK((poly_action(a, h, v, PolyKind::kPhi, k) - s_sum * v).norm() <= 1e-14);
  const SparseMatrix as = a.sparseView();
  CHECK((poly_action(as, h, v, PolyKind::kExp, k) - t_sum * v).norm() <= 1e-14);
  CHECK_THROWS_AS(poly_action(a, h, Vector(Vector::Zero(3)), PolyKind::kExp, k), DimensionError);
}

TEST_CASE("remainder bounds over the half disk") {
  const RemainderReport rep = verify_remainder_bounds(1000, 5, 20, 42);
  CHECK(rep.ok());
  REQUIRE(rep.bounds.size() == 4);
  for (const auto& b : rep.bounds) {
    CHECK(b.violations == 0);
    CHECK(b.worst_slack >= -1e-12);
    CHECK(b.checks > 0);
  }
  // The exp remainder bound is tight to first order at z = -1.
  const long double exact = std::exp(-1.0L);
  long double t5 = 0.0L, f = 1.0L;
  for (int j = 0; j <= 5; ++j) {
    if (j > 0) f *= j;
    t5 += ((j % 2) ? -1.0L : 1.0L) / f;
  }
  CHECK(double(std::abs(t5 - exact)) == doctest::Approx(0.0012127).epsilon(1e-4));
  CHECK(std::abs(truncated_exp(Complex(-1.0, 0.0), 5) - std::exp(-1.0)) == doctest::Approx(double(std::abs(t5 - exact))).epsilon(1e-10));
}

TEST_CASE("tail bound predicate") {
  CHECK(tail_poly_bound() == doctest::Approx(std::sqrt(1.04)));
  CHECK(tail_bound_holds(Complex(-1.0, 0.0), 2, 6));
  CHECK(tail_bound_holds(Complex(0.0, 1.0), 0, 10));
  CHECK_THROWS_AS(tail_bound_holds(Complex(0.0, 1.0), 0, 4), DomainError);
}

TEST_CASE("half-disk sampler stays in the closed half disk") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 5000; ++i) {
    const Complex z = sample_half_disk(rng);
    CHECK(z.real() <= 0.0);
    CHECK(std::abs(z) <= 1.0 + 1e-15);
  }
}
