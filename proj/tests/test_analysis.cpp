#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "odeql/analysis.hpp"
#include "odeql/generate.hpp"
#include "odeql/pipeline.hpp"

using namespace odeql;

namespace {

Instance scalar_instance(Complex lambda, Complex b, Complex x) {
  return Instance::from_eigendecomposition(DenseMatrix::Identity(1, 1), DenseMatrix::Identity(1, 1),
                                           Vector::Constant(1, lambda), Vector::Constant(1, b),
                                           Vector::Constant(1, x), 1.0);
}

SparseMatrix scalar_sparse(Complex lambda) {
  return DenseMatrix::Constant(1, 1, lambda).sparseView();
}

Vector unit_from_angle(double theta, Eigen::Index n, Eigen::Index where) {
  Vector v = Vector::Zero(n);
  v[0] = std::cos(theta);
  v[where] = std::sin(theta);
  return v;
}

}  // namespace

TEST_CASE("I_0(2) agrees with the standard library Bessel function") {
  CHECK(bessel_i0_at_2() == doctest::Approx(std::cyl_bessel_i(0.0, 2.0)).epsilon(1e-15));
}

TEST_CASE("scalar inverse columns") {
  SUBCASE("lambda = 0 on a small system") {
    const TaylorParams params{2, 5, 2, 1.0};
    const auto col = scalar_inverse_column(Complex(0.0, 0.0), params, 0);
    double sq = 0.0;
    for (Complex c : col) sq += std::norm(c);
    // x_{0,0} = x_{1,0} = x_{2,0} = x_{2,1} = x_{2,2} = 1
    CHECK(std::sqrt(sq) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    const auto last = scalar_inverse_column(Complex(0.0, 0.0), params, params.d());
    CHECK(last.back() == Complex(1.0, 0.0));
    for (int i = 0; i < params.d(); ++i) CHECK(last[i] == Complex(0.0, 0.0));
  }
  SUBCASE("agrees with the dense inverse") {
    for (Complex lambda : {Complex(-1.0, 0.0), Complex(0.0, 1.0), Complex(-0.3, -0.6)}) {
      const TaylorParams params{3, 6, 2, 1.0};
      const DenseMatrix inv = DenseMatrix(build_matrix(scalar_sparse(lambda), params)).inverse();
      for (int l = 0; l <= params.d(); ++l) {
        const auto col = scalar_inverse_column(lambda, params, l);
        for (int r = 0; r <= params.d(); ++r) CHECK(std::abs(col[r] - inv(r, l)) <= 1e-13);
      }
      const ColumnBoundReport rep = scalar_inverse_columns(lambda, params);
      CHECK(rep.passed());
      CHECK(rep.columns == params.d() + 1);
      CHECK(rep.norm_bound == doctest::Approx(std::sqrt(1.04 * std::numbers::e * std::cyl_bessel_i(0.0, 2.0) * 5.0)));
      CHECK(rep.entry_bound == doctest::Approx(std::sqrt(1.04 * std::numbers::e)));
    }
  }
  CHECK_THROWS_AS(scalar_inverse_columns(Complex(0.1, 0.0), TaylorParams{1, 5, 1, 1.0}), HypothesisError);
  CHECK_THROWS_AS(scalar_inverse_columns(Complex(-1.5, 0.0), TaylorParams{1, 5, 1, 1.0}), HypothesisError);
  CHECK_THROWS_AS(scalar_inverse_columns(Complex(-1.0, 0.0), TaylorParams{1, 4, 1, 1.0}), HypothesisError);
}

TEST_CASE("matrix norm components") {
  const TaylorParams params{2, 5, 2, 1.0};
  const EncodedSystem sys = encode(scalar_sparse(Complex(-0.5, 0.0)), Vector::Ones(1), Vector::Zero(1), params);
  const MatrixNormReport rep = matrix_norm_bounds(sys);
  CHECK(rep.components_ok);
  CHECK(rep.norm_c2 == doctest::Approx(std::sqrt(6.0)).epsilon(1e-5));
  CHECK(rep.norm_c3 == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rep.norm_ah == doctest::Approx(0.5));
  const double svd = Eigen::JacobiSVD<DenseMatrix>(DenseMatrix(sys.matrix)).singularValues()[0];
  CHECK(rep.norm_c == doctest::Approx(svd).epsilon(1e-5));
  CHECK(rep.bound.passed());
  CHECK(rep.bound.bound_at_worst == doctest::Approx(2.0 * std::sqrt(5.0)));

  const EncodedSystem low = encode(scalar_sparse(Complex(-0.5, 0.0)), Vector::Ones(1), Vector::Zero(1),
                                   TaylorParams{2, 4, 2, 1.0});
  CHECK_THROWS_AS(matrix_norm_bounds(low), HypothesisError);
}

TEST_CASE("inverse norm on the zero scalar system") {
  const TaylorParams params{1, 5, 1, 1.0};
  const Instance inst = scalar_instance(0.0, 1.0, 1.0);
  const EncodedSystem sys = encode(inst.a_sparse(), inst.x_in(), inst.b(), params);
  REQUIRE(sys.matrix.rows() == 8);
  const auto sv = Eigen::JacobiSVD<DenseMatrix>(DenseMatrix(sys.matrix)).singularValues();
  const InverseNormReport rep = inverse_norm_bound(sys, inst);
  CHECK(rep.norm_inverse == doctest::Approx(1.0 / sv[sv.size() - 1]).epsilon(1e-8));
  REQUIRE(rep.dense_svd_norm_inverse.has_value());
  CHECK(*rep.dense_svd_norm_inverse == doctest::Approx(1.0 / sv[sv.size() - 1]).epsilon(1e-10));
  CHECK(rep.bound.bound_at_worst == doctest::Approx(3.0 * std::sqrt(5.0) * 2.0));
  CHECK(rep.bound.passed());

  const ConditionReport cond = condition_number_bound(sys, inst);
  CHECK(cond.kappa_c == doctest::Approx(sv[0] / sv[sv.size() - 1]).epsilon(1e-5));
  CHECK(cond.bound.bound_at_worst == doctest::Approx(6.0 * 5.0 * 2.0));
  CHECK(cond.bound.passed());
}

TEST_CASE("solution error on the scalar decay example") {
  const Instance inst = scalar_instance(-1.0, 0.0, 1.0);
  const TaylorParams params{1, 5, 1, 1.0};
  const BlockSolution sol = forward_substitute(inst.a_sparse(), params, inst.x_in(), inst.b());
  const SolutionErrorReport rep = solution_error_report(inst, params, sol);
  REQUIRE(rep.errors.size() == 2);
  CHECK(rep.errors[0] == 0.0);
  long double t5 = 0.0L, f = 1.0L;
  for (int j = 0; j <= 5; ++j) {
    if (j > 0) f *= j;
    t5 += ((j % 2) ? -1.0L : 1.0L) / f;
  }
  const double exact_err = double(std::abs(t5 - std::exp(-1.0L)));
  CHECK(rep.errors[1] == doctest::Approx(exact_err).epsilon(1e-8));
  CHECK(rep.bounds[1] == doctest::Approx(2.8 / 720.0).epsilon(1e-12));
  CHECK(rep.bound.worst_ratio == doctest::Approx(exact_err / (2.8 / 720.0)).epsilon(1e-6));
  CHECK(rep.bound.passed());
}

TEST_CASE("per-step errors grow on a normal homogeneous problem") {
  GenSpec spec;
  spec.n = 6;
  spec.kappa = 1.0;
  spec.b_mode = BMode::kZero;
  spec.profile = EigenProfile::kPureImaginary;
  spec.seed = 3;
  const Instance inst = generate(spec);
  const TaylorParams params{8, 6, 8, 1.0 / (inst.norm_a() * (1 + 1e-6))};
  const BlockSolution sol = forward_substitute(inst.a_sparse(), params, inst.x_in(), inst.b());
  const SolutionErrorReport rep = solution_error_report(inst, params, sol);
  for (std::size_t j = 1; j < rep.errors.size(); ++j) CHECK(rep.errors[j] >= rep.errors[j - 1] - 1e-14);
  CHECK(rep.bound.passed());
}

TEST_CASE("decay profile") {
  SUBCASE("scalar decay over T = 2") {
    const DecayProfile d = estimate_decay(scalar_instance(-1.0, 0.0, 1.0), 2.0, 2);
    CHECK(d.g_grid == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
    CHECK(d.q == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(d.g_refined >= d.g_grid * (1 - 1e-12));
  }
  SUBCASE("norm-preserving flow") {
    GenSpec spec;
    spec.n = 4;
    spec.profile = EigenProfile::kPureImaginary;
    spec.b_mode = BMode::kZero;
    const DecayProfile d = estimate_decay(generate(spec), 3.0, 4);
    CHECK(d.g_grid == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("pure forcing grows from zero") {
    const DecayProfile d = estimate_decay(scalar_instance(0.0, 1.0, 0.0), 2.0, 2);
    CHECK(d.g_grid == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.norms[0] == 0.0);
  }
  CHECK_THROWS_AS(estimate_decay(scalar_instance(0.0, 0.0, 0.0), 1.0, 1), DegeneracyError);
}

TEST_CASE("success probability with a trivial generator") {
  const Instance inst = scalar_instance(0.0, 0.0, 1.0);
  for (int m : {1, 2, 5}) {
    const TaylorParams params{m, 6, m, 1.0};
    const BlockSolution sol = forward_substitute(inst.a_sparse(), params, inst.x_in(), inst.b());
    const SuccessProbabilityReport rep = success_probability_report(inst, params, sol);
    CHECK(rep.success_probability == doctest::Approx(double(m + 1) / (2 * m + 1)).epsilon(1e-14));
    CHECK(rep.bound.passed());
    REQUIRE(rep.equal_padding.has_value());
    CHECK(rep.equal_padding->passed());
  }
  // 6! = 720 < 70 * 11
  const TaylorParams tight{11, 5, 11, 1.0};
  const BlockSolution sol = forward_substitute(inst.a_sparse(), tight, inst.x_in(), inst.b());
  CHECK_FALSE(success_hypothesis_holds(inst, tight, 1.0));
  CHECK_THROWS_AS(success_probability_report(inst, tight, sol), HypothesisError);
}

TEST_CASE("state distance predicates") {
  CHECK(normalized_distance_bound(0.5, 0.1) == doctest::Approx(0.4));
  CHECK(conditional_distance_bound(0.5, 0.1) == doctest::Approx(0.5));
  CHECK(amplitude_lower_bound(0.5, 0.1) == doctest::Approx(0.4));

  SUBCASE("identical states") {
    const Vector v = unit_from_angle(0.7, 4, 2);
    const ConditionalCheck c = check_conditional_state(v, v, 1, 0.0 + 1e-3);
    CHECK(c.state.holds());
    CHECK(c.state.observed == 0.0);
    CHECK(c.amplitude.holds());
  }
  SUBCASE("rotation in a plane") {
    // psi = (cos a, sin a), phi rotated by t; the head is the first entry.
    const double a = 0.6, t = 0.05;
    const Vector psi = unit_from_angle(a, 2, 1);
    const Vector phi = unit_from_angle(a + t, 2, 1);
    const double delta = (psi - phi).norm();
    CHECK(delta == doctest::Approx(2 * std::sin(t / 2)));
    const ConditionalCheck c = check_conditional_state(psi, phi, 1, delta);
    CHECK(c.state.hypotheses_ok);
    CHECK(c.amplitude.observed == doctest::Approx(std::cos(a) - delta));
    CHECK(c.amplitude.bound == doctest::Approx(std::cos(a + t)));
    CHECK(c.amplitude.holds());
    CHECK(c.state.holds());
  }
  SUBCASE("unmet hypotheses are not claimed") {
    const Vector psi = unit_from_angle(1.5, 3, 1);  // head amplitude cos 1.5 ~ 0.07
    const Vector phi = unit_from_angle(1.3, 3, 2);
    const ConditionalCheck c = check_conditional_state(psi, phi, 1, 0.5);
    CHECK_FALSE(c.state.hypotheses_ok);
    CHECK_FALSE(c.state.holds());
  }
  SUBCASE("normalized distance") {
    Vector psi(2), phi(2);
    psi << 2.0, 0.0;
    phi << 2.0, 0.3;
    const DistanceCheck d = check_normalized_distance(psi, phi, 2.0, 0.3);
    CHECK(d.hypotheses_ok);
    CHECK(d.holds());
    CHECK(d.bound == doctest::Approx(0.3));
  }
}

TEST_CASE("random state-distance checks") {
  const StateDistanceReport rep = state_distance_checks(2000, 11);
  CHECK(rep.passed());
  CHECK(rep.normalized.instances_checked == 2000);
  CHECK(rep.conditional.instances_checked == 2000);
  CHECK(rep.amplitude.instances_checked == 2000);
}

TEST_CASE("bound reports merge associatively") {
  BoundReport a, b, c;
  a.bound_name = b.bound_name = c.bound_name = "x";
  a.record(0.3, 3, 10, "a");
  b.record(0.7, 7, 10, "b");
  b.record_not_claimed();
  c.record(0.5, 5, 10, "c");
  BoundReport left = a;
  left.merge(b);
  left.merge(c);
  BoundReport bc = b;
  bc.merge(c);
  BoundReport right = a;
  right.merge(bc);
  CHECK(left.worst_ratio == right.worst_ratio);
  CHECK(left.argmax_instance == right.argmax_instance);
  CHECK(left.argmax_instance == "b");
  CHECK(left.instances_checked == 3);
  CHECK(left.not_claimed == 1);
  CHECK(right.instances_checked == 3);
}
