#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "odeql/pipeline.hpp"

using namespace odeql;

namespace {

Instance scalar_instance(Complex lambda, Complex b, Complex x) {
  return Instance::from_eigendecomposition(DenseMatrix::Identity(1, 1), DenseMatrix::Identity(1, 1),
                                           Vector::Constant(1, lambda), Vector::Constant(1, b),
                                           Vector::Constant(1, x), 1.0);
}

// Closed-form start clamped to 5, then raised by direct multiplication.
int brute_k(double omega, int m) {
  const double lo = std::log(omega);
  int k = std::max(5, int(std::floor(2.0 * lo / std::log(lo))));
  double f = 1.0;
  for (int j = 2; j <= k + 1; ++j) f *= j;
  while (f < omega || f < 2.0 * m) {
    ++k;
    f *= (k + 1);
  }
  return k;
}

}  // namespace

TEST_CASE("step count from T ||A||") {
  const ParameterChoice c = choose_parameters(2.0, 1.6, 1e-3, 1.0, 1.0, 1.0, 0.0, 1.0);
  CHECK(c.params.m == 4);
  CHECK(c.params.p == 4);
  CHECK(c.params.h == doctest::Approx(0.5));
  const ParameterChoice zero = choose_parameters(3.0, 0.0, 1e-3, 1.0, 1.0, 1.0, 0.0, 1.0);
  CHECK(zero.params.m == 1);
  CHECK(zero.params.h == 3.0);
  // An estimate a hair under an integer still keeps ||A h|| <= 1.
  const ParameterChoice edge = choose_parameters(1.0, 3.0 - 1e-12, 1e-3, 1.0, 1.0, 1.0, 0.0, 1.0);
  CHECK(edge.params.m == 4);
}

TEST_CASE("truncation order from Omega") {
  // Omega = 70 kappa m g (||x_in|| + T ||b||) / (eps ||x(T)||)
  const ParameterChoice at70 = choose_parameters(1.0, 0.5, 0.5, 1.0, 1.0, 0.5, 0.0, 1.0);
  CHECK(at70.log_omega == doctest::Approx(std::log(70.0)));
  CHECK(at70.params.k == 5);
  const ParameterChoice big = choose_parameters(1.0, 0.5, 0.5, 1.0, 1.0, 0.5e6 / 70.0, 0.0, 1.0);
  CHECK(big.log_omega == doctest::Approx(std::log(1e6)));
  CHECK(big.params.k == 10);
  CHECK(big.factorial_slack >= 0.0);
  CHECK(big.delta == doctest::Approx(0.5 / 25.0));
  CHECK_THROWS_AS(choose_parameters(1.0, 0.5, 0.5, 1.0, 1.0, 0.4, 0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(choose_parameters(1.0, 0.5, 0.6, 1.0, 1.0, 1.0, 0.0, 1.0), ParameterError);

  for (double lo = std::log(70.0); lo < 200.0; lo *= 1.37) {
    for (int m : {1, 10, 1000}) {
      const TruncationOrder t = truncation_order(lo, m);
      CHECK(t.k >= 5);
      CHECK(log_factorial(t.k + 1) >= lo - 1e-12);
      CHECK(log_factorial(t.k + 1) >= std::log(2.0 * m) - 1e-12);
      if (lo < 600.0) CHECK(t.k == brute_k(std::exp(lo), m));
      if (m == 1) CHECK(double(t.k) <= t.growth_limit);
    }
  }
}

TEST_CASE("amplification") {
  CHECK(amplification_estimate(1.0) == 1);
  CHECK(amplification_estimate(1.0 / 121.0) == 11);
  CHECK(amplification_estimate(0.5) == 2);
  CHECK_THROWS_AS(amplification_estimate(0.0), DegeneracyError);
  CHECK(amplification_round_limit(2.0) == 24);
  CHECK(amplification_round_limit(1.01) == 13);
}

TEST_CASE("delta injection parsing and config validation") {
  CHECK(DeltaInjection::parse("off").mode == DeltaInjection::Mode::kOff);
  CHECK(DeltaInjection::parse("auto").mode == DeltaInjection::Mode::kAuto);
  const DeltaInjection v = DeltaInjection::parse("0.25");
  CHECK(v.mode == DeltaInjection::Mode::kValue);
  CHECK(v.value == 0.25);
  CHECK_THROWS(DeltaInjection::parse("3"));
  CHECK_THROWS(DeltaInjection::parse("maybe"));
  RunConfig cfg;
  cfg.epsilon = 0.7;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.epsilon = 1e-3;
  cfg.t_final = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("trivial generator gives the padding fraction") {
  const Instance inst = scalar_instance(0.0, 0.0, 1.0);
  RunConfig cfg;
  cfg.t_final = 1.0;
  cfg.epsilon = 1e-3;
  const PipelineReport rep = run(inst, cfg);
  CHECK(rep.params.m == 1);
  CHECK(rep.params.p == 1);
  CHECK(rep.success_prob == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(rep.fidelity_error <= 1e-15);
}

TEST_CASE("a run is deterministic and normalized") {
  GenSpec spec;
  spec.n = 4;
  spec.kappa = 3.0;
  spec.seed = 5;
  const Instance inst = generate(spec);
  RunConfig cfg;
  cfg.t_final = 2.0;
  cfg.epsilon = 1e-4;
  cfg.seed = 17;
  cfg.delta_injection = DeltaInjection::automatic();
  const PipelineReport a = run(inst, cfg);
  const PipelineReport b = run(inst, cfg);
  CHECK(a.sampled_flat == b.sampled_flat);
  CHECK(a.output_state == b.output_state);
  CHECK(a.block_probabilities == b.block_probabilities);
  CHECK(std::abs(a.probability_sum - 1.0) <= 1e-12);
  double sum = 0.0;
  for (double p : a.block_probabilities) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.block_probabilities.size() == std::size_t(a.params.d() + 1));
  CHECK(a.worst_success_fidelity <= cfg.epsilon);
  CHECK(a.delta == doctest::Approx(a.delta_target));
  CHECK(a.success_prob >= 1.0 / (121.0 * a.g_grid * a.g_grid));
  for (const auto& ic : a.injection_checks) {
    CHECK(ic.check.state.holds());
    CHECK(ic.check.amplitude.holds());
  }
  CHECK(a.success_flag == in_success_set(a.sampled_flat, a.params));
}

TEST_CASE("exact run stays inside the solution-error fidelity bound") {
  GenSpec spec;
  spec.n = 8;
  spec.kappa = 10.0;
  spec.seed = 2;
  const Instance inst = generate(spec);
  RunConfig cfg;
  cfg.t_final = 3.0;
  cfg.epsilon = 1e-6;
  const PipelineReport rep = run(inst, cfg);
  CHECK(rep.delta == 0.0);
  CHECK(rep.worst_success_fidelity <= rep.exact_fidelity_bound * (1 + 1e-9));
  CHECK(rep.worst_success_fidelity <= cfg.epsilon);
}

TEST_CASE("decay factor two keeps amplification within 24 rounds") {
  const Instance inst = scalar_instance(-1.0, 0.0, 1.0);
  RunConfig cfg;
  cfg.t_final = std::log(2.0);
  cfg.epsilon = 1e-3;
  cfg.delta_injection = DeltaInjection::automatic();
  const PipelineReport rep = run(inst, cfg);
  CHECK(rep.g_grid == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.amplification_limit == 24);
  CHECK(rep.amplification_rounds <= 24);
}

TEST_CASE("sweep rows") {
  SweepConfig cfg;
  cfg.kappas = {1.0, 3.0};
  cfg.base.n = 4;
  const SweepResult res = sweep(cfg);
  REQUIRE(res.rows.size() == 8);
  CHECK(res.passed());
  for (std::size_t r = 1; r < 4; ++r) CHECK(res.rows[r].k >= res.rows[r - 1].k);
  const std::string csv = sweep_csv(res);
  CHECK(csv.rfind("epsilon,k,d,success_prob,fidelity_error", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}
