#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odeql/analysis.hpp"
#include "odeql/generate.hpp"

namespace odeql {

/// How the emulated linear-solver inexactness is chosen.
struct DeltaInjection {
  enum class Mode { kOff, kAuto, kValue };
  Mode mode = Mode::kOff;
  double value = 0.0;  // used by kValue

  static DeltaInjection off() { return {}; }
  static DeltaInjection automatic() { return {Mode::kAuto, 0.0}; }
  static DeltaInjection fixed(double d) { return {Mode::kValue, d}; }
  /// "off", "auto", or a number.
  static DeltaInjection parse(const std::string& s);
};

struct RunConfig {
  double t_final = 1.0;
  double epsilon = 1e-3;  // in (0, 1/2]
  std::uint64_t seed = 1;
  DeltaInjection delta_injection;

  void validate() const;
};

struct TruncationOrder {
  int k = 0;
  int k_formula = 0;  // floor(2 ln Omega / ln ln Omega)
  int increments = 0;  // steps added after clamping to k >= 5
  double growth_limit = 0.0;  // 2 ln Omega / ln ln Omega + 2
};

/// k from the closed form, clamped to k >= 5, then raised until
/// (k+1)! >= Omega and (k+1)! >= 2m (compared in log space).
TruncationOrder truncation_order(double log_omega, int m);

/// Parameter selection together with its diagnostics.
struct ParameterChoice {
  TaylorParams params;
  double log_omega = 0.0;
  double delta = 0.0;      // eps / (25 sqrt(m) g)
  int k_formula = 0;       // floor(2 ln Omega / ln ln Omega)
  int k_increments = 0;    // steps added after clamping to k >= 5
  double factorial_slack = 0.0;  // ln (k+1)! - ln Omega, >= 0
  double k_growth_limit = 0.0;   // 2 ln Omega / ln ln Omega + 2
};

/// ceil(T ||A|| (1 + 1e-6)), at least 1.
int step_count(double t_final, double norm_a);

/// h = T / ceil(T ||A||), m = p = ceil(T ||A||) with ||A|| inflated by
/// (1 + 1e-6) so an estimate just below the true norm still gives ||A h|| <= 1.
/// A zero norm gives m = 1. Throws ParameterError for Omega < 70 or bad input.
ParameterChoice choose_parameters(double t_final, double norm_a, double epsilon, double g,
                                  double kappa_v, double x_in_norm, double b_norm,
                                  double xt_norm);

/// ceil(1 / sqrt(success_prob)). Throws DegeneracyError for zero probability.
int amplification_estimate(double success_prob);
/// ceil(12 g), the round budget the success-probability bound allows.
int amplification_round_limit(double g);

/// Conditional-state checks on one success-set block after injection.
struct InjectionCheck {
  int flat_index = 0;
  double alpha = 0.0;  // amplitude before injection
  double beta = 0.0;   // amplitude after
  ConditionalCheck check;
};

struct PipelineReport {
  RunConfig config;
  ParameterChoice choice;
  TaylorParams params;
  double log_omega = 0.0;
  double delta = 0.0;  // injected distance (0 when off)
  double delta_target = 0.0;  // eps / (25 sqrt(m) g)
  double g_grid = 0.0;
  double g_refined = 0.0;
  double beta = 0.0;  // (||x_in|| + T ||b||) / ||x(T)||
  double xt_norm = 0.0;
  double norm_a = 0.0;
  double kappa_v = 1.0;

  std::vector<double> block_probabilities;
  double probability_sum = 0.0;
  double success_prob = 0.0;
  double success_prob_exact = 0.0;  // before injection

  BlockIndex sampled_index;
  int sampled_flat = 0;
  bool success_flag = false;
  Vector output_state;
  double fidelity_error = 0.0;
  double worst_success_fidelity = 0.0;  // max over the success set

  /// 2 (error bound at j = m) / ||x(T)||; meaningful without injection.
  double exact_fidelity_bound = 0.0;
  std::vector<InjectionCheck> injection_checks;

  int amplification_rounds = 0;
  int amplification_limit = 0;
  bool success_hypothesis = false;
};

/// Chooses parameters, forward-solves, optionally perturbs the normalized
/// solution by exactly delta, and samples one block index.
PipelineReport run(const Instance& inst, const RunConfig& cfg);

struct SweepConfig {
  std::vector<double> t_values{2.0};
  std::vector<double> epsilons{1e-2, 1e-4, 1e-6, 1e-8};
  std::vector<double> kappas{1.0, 3.0};
  GenSpec base;  // N, profile, b mode and seed; kappa is overridden
  DeltaInjection delta_injection = DeltaInjection::automatic();
  std::uint64_t seed = 1;
};

struct SweepRow {
  double t_final = 0.0;
  double epsilon = 0.0;
  double kappa = 0.0;
  int k = 0;
  int d = 0;
  int m = 0;
  double log_omega = 0.0;
  double k_growth_limit = 0.0;
  double success_prob = 0.0;
  double fidelity_error = 0.0;
  double worst_success_fidelity = 0.0;
  bool success_flag = false;
  bool passed = false;  // worst success fidelity <= eps and k within the growth limit
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool passed() const;
};

SweepResult sweep(const SweepConfig& cfg);

/// eps,k,d,success_prob,fidelity_error plus context columns.
std::string sweep_csv(const SweepResult& result);

}  // namespace odeql
