#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odeql/numerics.hpp"
#include "odeql/solver.hpp"

namespace odeql {

/// Relative slack on every bound comparison; absorbs rounding in the bound
/// constants themselves (e, I_0(2), log-space factorials).
inline constexpr double kBoundSlack = 1e-9;

/// Outcome of checking one inequality over one or more instances. Ratios are
/// oriented so that passing means ratio <= 1: observed/bound for upper
/// bounds and bound/observed for lower bounds.
struct BoundReport {
  std::string bound_name;
  std::size_t instances_checked = 0;
  std::size_t not_claimed = 0;  // instances whose hypotheses failed
  double worst_ratio = 0.0;
  std::string argmax_instance;
  double observed_at_worst = 0.0;
  double bound_at_worst = 0.0;
  bool hypotheses_ok = true;

  bool passed() const { return hypotheses_ok && worst_ratio <= 1.0 + kBoundSlack; }

  /// Folds one observation in.
  void record(double ratio, double observed, double bound, const std::string& instance);
  void record_not_claimed() { ++not_claimed; }
  /// Associative merge of two reports on the same bound.
  void merge(const BoundReport& other);
};

/// I_0(2) = sum_j 1/(j!)^2, summed until terms drop below 1e-17.
double bessel_i0_at_2();

/// ||C^-1 e_l|| <= sqrt(1.04 e I_0(2) (m+p)) and |<n|C^-1|l>| <= sqrt(1.04 e)
/// for the scalar system C_{m,k,p}(lambda).
struct ColumnBoundReport {
  double norm_bound = 0.0;
  double entry_bound = 0.0;
  double worst_norm = 0.0;
  int worst_norm_column = -1;
  double worst_entry = 0.0;
  int worst_entry_column = -1;
  int worst_entry_row = -1;
  int columns = 0;

  bool passed() const {
    return worst_norm <= norm_bound * (1.0 + kBoundSlack) &&
           worst_entry <= entry_bound * (1.0 + kBoundSlack);
  }
};

/// Requires |lambda| <= 1, Re(lambda) <= 0, k >= 5, (k+1)! >= 2m; throws
/// HypothesisError otherwise. Solves every column by the scalar recurrences
/// (independent of the sparse assembly).
ColumnBoundReport scalar_inverse_columns(Complex lambda, const TaylorParams& params);

/// Solution of C_{m,k,p}(lambda) x = e_l by scalar forward substitution.
std::vector<Complex> scalar_inverse_column(Complex lambda, const TaylorParams& params, int l);

struct MatrixNormReport {
  BoundReport bound;  // ||C|| <= 2 sqrt(k)
  double norm_c = 0.0;
  double norm_c1 = 1.0;
  double norm_c2 = 0.0;
  double norm_c3 = 0.0;
  double norm_ah = 0.0;
  bool components_ok = false;  // ||C2|| = sqrt(k+1), ||C3|| = max(||Ah||, 1) within tolerance
};

/// Power iteration at tolerance 1e-6. ||Ah|| is read off the (1,0) block of
/// the assembled matrix. Requires ||Ah|| <= 1 and k >= 5.
MatrixNormReport matrix_norm_bounds(const EncodedSystem& system);

struct InverseNormReport {
  BoundReport bound;  // ||C^-1|| <= 3 kappa_V sqrt(k) (m+p)
  double norm_inverse = 0.0;
  int iterations = 0;
  std::optional<double> dense_svd_norm_inverse;  // cross-check when (d+1)N <= 2000
};

/// ||C^-1|| = 1/sigma_min(C) by power iteration on C^-H C^-1 using triangular
/// solves. Hypotheses come from the instance: Re(lambda_i) <= 0,
/// |lambda_i h| <= 1, k >= 5, (k+1)! >= 2m.
InverseNormReport inverse_norm_bound(const EncodedSystem& system, const Instance& inst,
                                     Eigen::Index dense_check_limit = 2000);

struct ConditionReport {
  BoundReport bound;  // kappa_C <= 6 kappa_V k (m+p)
  double norm_c = 0.0;
  double norm_inverse = 0.0;
  double kappa_c = 0.0;
};

ConditionReport condition_number_bound(const EncodedSystem& system, const Instance& inst,
                                       Eigen::Index dense_check_limit = 2000);

/// Per-step errors of the truncated solve against the exact solution.
struct SolutionErrorReport {
  BoundReport bound;
  std::vector<double> errors;  // eps_j = ||x(jh) - x_{j,0}||, j = 0..m
  std::vector<double> bounds;  // 2.8 kappa_V j (||x_in|| + m h ||b||)/(k+1)!
  /// Below this level the double-precision oracle cannot resolve errors;
  /// steps whose bound falls under it are checked against the floor instead.
  double resolution_floor = 0.0;
  std::size_t floor_limited_steps = 0;
};

/// Relative oracle resolution used by the solution-error check, in units of
/// kappa_V (||x_in|| + m h ||b||).
inline constexpr double kResolutionFloor = 1e-12;

SolutionErrorReport solution_error_report(const Instance& inst, const TaylorParams& params,
                                          const BlockSolution& sol);

/// Norm trajectory of the exact solution on the step grid.
struct DecayProfile {
  double q = 0.0;       // ||x(T)||
  double g_grid = 0.0;  // max_i ||x(ih)|| / ||x(mh)||
  double g_refined = 0.0;  // same on 8 subpoints per step; informational
  std::vector<double> norms;  // ||x(ih)||, i = 0..m
};

/// Throws DegeneracyError when ||x(T)|| < 1e-300.
DecayProfile estimate_decay(const Instance& inst, double t_final, int m);

struct SuccessProbabilityReport {
  BoundReport bound;  // ||x_{m,0}|| / ||x|| >= 1/sqrt(p + 77 m g^2)
  double ratio = 0.0;
  double lower_bound = 0.0;
  double g_grid = 0.0;
  double success_probability = 0.0;  // sum over the success set of |alpha_l|^2
  /// With p == m: success_probability >= 1/(78 g^2).
  std::optional<BoundReport> equal_padding;
};

/// Requires (k+1)! >= 70 kappa_V m (||x_in|| + m h ||b||)/||x(mh)||, checked
/// in log space, together with ||Ah|| <= 1, Re(lambda_i) <= 0 and k >= 5;
/// throws HypothesisError otherwise.
SuccessProbabilityReport success_probability_report(const Instance& inst,
                                                    const TaylorParams& params,
                                                    const BlockSolution& sol);
SuccessProbabilityReport success_probability_report(const Instance& inst,
                                                    const TaylorParams& params,
                                                    const BlockSolution& sol,
                                                    const DecayProfile& decay);

/// Whether the success-probability hypothesis on k holds.
bool success_hypothesis_holds(const Instance& inst, const TaylorParams& params, double xt_norm);

// State-distance inequalities, usable as predicates.

/// ||psi|| >= alpha > 0, ||psi - phi|| <= beta  =>  ||psi/|psi| - phi/|phi||| <= 2 beta/alpha.
double normalized_distance_bound(double alpha, double beta);
/// Distance bound 2 delta/(alpha - delta) on the conditional states; needs delta < alpha.
double conditional_distance_bound(double alpha, double delta);
/// Amplitude lower bound alpha - delta.
double amplitude_lower_bound(double alpha, double delta);

struct DistanceCheck {
  bool hypotheses_ok = false;
  double observed = 0.0;
  double bound = 0.0;
  bool holds() const { return hypotheses_ok && observed <= bound * (1.0 + kBoundSlack) + 1e-15; }
};

DistanceCheck check_normalized_distance(const Vector& psi, const Vector& phi, double alpha,
                                        double beta);

/// Unit states split as (first `head` entries | rest). alpha is the norm of
/// psi's head, beta the norm of phi's head.
struct ConditionalCheck {
  DistanceCheck state;      // ||phi_0 - psi_0|| <= 2 delta/(alpha - delta)
  DistanceCheck amplitude;  // alpha - delta <= beta, stored as observed = alpha - delta, bound = beta
};
ConditionalCheck check_conditional_state(const Vector& psi, const Vector& phi, Eigen::Index head,
                                         double delta);

struct StateDistanceReport {
  BoundReport normalized;   // 2 beta / alpha
  BoundReport conditional;  // 2 delta / (alpha - delta)
  BoundReport amplitude;    // beta >= alpha - delta
  std::vector<std::string> failures;
  bool passed() const {
    return failures.empty() && normalized.passed() && conditional.passed() && amplitude.passed();
  }
};

/// Random hypothesis-satisfying pairs for each of the three inequalities,
/// `trials` of each.
StateDistanceReport state_distance_checks(std::size_t trials, std::uint64_t seed);

}  // namespace odeql
