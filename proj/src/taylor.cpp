#include "odeql/taylor.hpp"

#include <cmath>
#include <cstdio>

#include "odeql/numerics.hpp"

namespace odeql {

namespace {

constexpr double kSlackFloor = -1e-12;
constexpr std::size_t kMaxFailures = 32;

// e^z - 1 without cancellation:
//   Re = expm1(x) cos y - 2 sin^2(y/2),  Im = e^x sin y.
Complex complex_expm1(Complex z) {
  const double x = z.real();
  const double y = z.imag();
  const double s = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y)};
}

std::string describe(Complex z, int k, int b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "(z=%.17g%+.17gi, k=%d, b=%d)", z.real(), z.imag(), k, b);
  return buf;
}

struct Tracker {
  BoundSlack slack;
  std::vector<std::string>* failures;

  void record(double bound, double observed, Complex z, int k, int b) {
    const double s = bound - observed;
    if (slack.checks == 0 || s < slack.worst_slack) {
      slack.worst_slack = s;
      slack.argmax_z = z;
      slack.argmax_k = k;
      slack.argmax_b = b;
    }
    const double ratio = observed / (bound - kSlackFloor);
    if (slack.checks == 0 || ratio > slack.worst_ratio) {
      slack.worst_ratio = ratio;
      slack.observed_at_worst_ratio = observed;
      slack.bound_at_worst_ratio = bound;
    }
    ++slack.checks;
    if (s < kSlackFloor) {
      ++slack.violations;
      if (failures->size() < kMaxFailures) failures->push_back(slack.name + " " + describe(z, k, b));
    }
  }
};

}  // namespace

Complex phi1(Complex z) {
  if (std::abs(z) < 1e-8) return 1.0 + z / 2.0 + z * z / 6.0;
  return complex_expm1(z) / z;
}

double tail_poly_bound() { return std::sqrt(1.04); }

bool tail_bound_holds(Complex z, int b, int k, double slack) {
  if (k < 5) throw DomainError("tail_bound_holds: the sqrt(1.04) bound is only claimed for k >= 5");
  return std::abs(tail_poly(z, b, k)) <= tail_poly_bound() + slack;
}

RemainderReport verify_remainder_bounds(std::size_t samples, int k_lo, int k_hi,
                                        std::uint64_t seed) {
  if (samples < 1) throw DomainError("verify_remainder_bounds: samples must be >= 1");
  if (k_lo < 1 || k_hi < k_lo) throw DomainError("verify_remainder_bounds: need 1 <= k_lo <= k_hi");

  RemainderReport report;
  report.samples = samples;
  report.k_lo = k_lo;
  report.k_hi = k_hi;
  report.seed = seed;

  Tracker exp_err{{"exp_remainder"}, &report.failures};
  Tracker exp_mag{{"exp_magnitude"}, &report.failures};
  Tracker phi_err{{"phi_remainder"}, &report.failures};
  Tracker tail_mag{{"tail_magnitude"}, &report.failures};

  std::vector<Complex> points = {Complex(0.0, 0.0), Complex(-1.0, 0.0), Complex(0.0, 1.0),
                                 Complex(0.0, -1.0),
                                 Complex(-1.0, 1.0) / std::sqrt(2.0)};
  std::mt19937_64 rng(seed);
  points.reserve(points.size() + samples);
  for (std::size_t s = 0; s < samples; ++s) points.push_back(sample_half_disk(rng));

  for (const Complex z : points) {
    const Complex ez = std::exp(z);
    const Complex phi = phi1(z);
    for (int k = k_lo; k <= k_hi; ++k) {
      const double rem = std::exp(-log_factorial(k + 1));
      const Complex tk = truncated_exp(z, k);
      exp_err.record(rem, std::abs(tk - ez), z, k, -1);
      exp_mag.record(1.0 + rem, std::abs(tk), z, k, -1);
      phi_err.record(rem, std::abs(truncated_phi(z, k) - phi), z, k, -1);
      if (k >= 5) {
        for (int b = 0; b <= k; ++b) {
          tail_mag.record(tail_poly_bound(), std::abs(tail_poly(z, b, k)), z, k, b);
        }
      }
    }
  }
  report.bounds = {exp_err.slack, exp_mag.slack, phi_err.slack, tail_mag.slack};
  return report;
}

}  // namespace odeql
