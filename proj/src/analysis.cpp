#include "odeql/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/SVD>

#include "odeql/taylor.hpp"

namespace odeql {

namespace {

constexpr double kNormTolerance = 1e-6;

double safe_ratio(double observed, double bound) {
  if (observed == 0.0) return 0.0;
  if (bound == 0.0) return std::numeric_limits<double>::infinity();
  return observed / bound;
}

void require_spectral_hypotheses(const Instance& inst, const TaylorParams& params, const char* who) {
  if (!params.bound_hypotheses_hold()) {
    throw HypothesisError(std::string(who) + ": requires k >= 5 and (k+1)! >= 2m");
  }
  for (Eigen::Index i = 0; i < inst.eigenvalues().size(); ++i) {
    const Complex lam = inst.eigenvalues()[i];
    if (lam.real() > 0.0) throw HypothesisError(std::string(who) + ": eigenvalue with Re > 0");
    if (std::abs(lam) * params.h > 1.0 + kStepNormTolerance) {
      throw HypothesisError(std::string(who) + ": |lambda h| > 1");
    }
  }
}

void require_step_norm(const Instance& inst, const TaylorParams& params, const char* who) {
  if (inst.norm_a() * params.h > 1.0 + kStepNormTolerance) {
    throw HypothesisError(std::string(who) + ": ||Ah|| > 1");
  }
}

std::string describe(const TaylorParams& p, Eigen::Index n) {
  return "N=" + std::to_string(n) + ",m=" + std::to_string(p.m) + ",k=" + std::to_string(p.k) +
         ",p=" + std::to_string(p.p);
}

}  // namespace

void BoundReport::record(double ratio, double observed, double bound, const std::string& instance) {
  if (instances_checked == 0 || ratio > worst_ratio || std::isnan(ratio)) {
    worst_ratio = std::isnan(ratio) ? std::numeric_limits<double>::infinity() : ratio;
    observed_at_worst = observed;
    bound_at_worst = bound;
    argmax_instance = instance;
  }
  ++instances_checked;
}

void BoundReport::merge(const BoundReport& other) {
  if (bound_name.empty()) bound_name = other.bound_name;
  if (other.instances_checked > 0 && (instances_checked == 0 || other.worst_ratio > worst_ratio)) {
    worst_ratio = other.worst_ratio;
    observed_at_worst = other.observed_at_worst;
    bound_at_worst = other.bound_at_worst;
    argmax_instance = other.argmax_instance;
  }
  instances_checked += other.instances_checked;
  not_claimed += other.not_claimed;
  hypotheses_ok = hypotheses_ok && other.hypotheses_ok;
}

double bessel_i0_at_2() {
  double sum = 0.0;
  double term = 1.0;  // 1/(j!)^2
  for (int j = 1; term > 1e-17; ++j) {
    sum += term;
    term /= double(j) * double(j);
  }
  return sum;
}

std::vector<Complex> scalar_inverse_column(Complex lambda, const TaylorParams& params, int l) {
  params.validate();
  const int d = params.d();
  const int k = params.k;
  const int tail = params.m * (k + 1);
  if (l < 0 || l > d) throw DomainError("scalar_inverse_column: column out of range");
  std::vector<Complex> x(d + 1, Complex(0.0, 0.0));
  for (int r = 0; r <= d; ++r) {
    Complex v = r == l ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
    const int j = r < tail ? r % (k + 1) : r - tail;
    if (r == 0) {
    } else if (r < tail && j >= 1) {
      v += (lambda / double(j)) * x[r - 1];
    } else if (j == 0) {
      for (int q = 0; q <= k; ++q) v += x[r - (k + 1) + q];
    } else {
      v += x[r - 1];
    }
    x[r] = v;
  }
  return x;
}

ColumnBoundReport scalar_inverse_columns(Complex lambda, const TaylorParams& params) {
  params.validate();
  if (std::abs(lambda) > 1.0 + 1e-12 || lambda.real() > 0.0) {
    throw HypothesisError("scalar_inverse_columns: requires |lambda| <= 1 and Re(lambda) <= 0");
  }
  if (!params.bound_hypotheses_hold()) {
    throw HypothesisError("scalar_inverse_columns: requires k >= 5 and (k+1)! >= 2m");
  }
  ColumnBoundReport rep;
  rep.norm_bound = std::sqrt(1.04 * std::numbers::e * bessel_i0_at_2() * (params.m + params.p));
  rep.entry_bound = std::sqrt(1.04 * std::numbers::e);
  rep.columns = params.d() + 1;
  for (int l = 0; l <= params.d(); ++l) {
    const auto x = scalar_inverse_column(lambda, params, l);
    double sq = 0.0;
    for (int n = 0; n <= params.d(); ++n) {
      const double a = std::abs(x[n]);
      sq += a * a;
      if (a > rep.worst_entry) {
        rep.worst_entry = a;
        rep.worst_entry_column = l;
        rep.worst_entry_row = n;
      }
    }
    const double nrm = std::sqrt(sq);
    if (nrm > rep.worst_norm) {
      rep.worst_norm = nrm;
      rep.worst_norm_column = l;
    }
  }
  return rep;
}

MatrixNormReport matrix_norm_bounds(const EncodedSystem& system) {
  const TaylorParams& p = system.params;
  if (p.k < 5) throw HypothesisError("matrix_norm_bounds: requires k >= 5");
  const Eigen::Index n = system.n;
  MatrixNormReport rep;
  rep.bound.bound_name = "norm_C";

  // Block (1, 0) holds -Ah.
  const DenseMatrix ah = DenseMatrix(system.matrix.block(n, 0, n, n));
  rep.norm_ah = ah.isZero(0.0) ? 0.0 : spectral_norm(ah, 1e-10);
  if (rep.norm_ah > 1.0 + kStepNormTolerance) throw HypothesisError("matrix_norm_bounds: ||Ah|| > 1");

  rep.norm_c = spectral_norm(system.matrix, kNormTolerance);
  const SparseMatrix zero(n, n);
  const MatrixComponents parts = build_components(zero, p);
  SparseMatrix c3 = system.matrix - parts.identity - parts.collectors;
  c3.prune(Complex(0.0, 0.0), 0.0);
  rep.norm_c2 = spectral_norm(parts.collectors, kNormTolerance);
  rep.norm_c3 = spectral_norm(c3, kNormTolerance);
  const double c2_expected = std::sqrt(double(p.k + 1));
  const double c3_expected = std::max(rep.norm_ah, 1.0);
  rep.components_ok = std::abs(rep.norm_c2 - c2_expected) <= 1e-5 * c2_expected &&
                      std::abs(rep.norm_c3 - c3_expected) <= 1e-5 * c3_expected;
  const double bound = 2.0 * std::sqrt(double(p.k));
  rep.bound.record(rep.norm_c / bound, rep.norm_c, bound, describe(p, n));
  return rep;
}

InverseNormReport inverse_norm_bound(const EncodedSystem& system, const Instance& inst,
                                     Eigen::Index dense_check_limit) {
  const TaylorParams& p = system.params;
  require_spectral_hypotheses(inst, p, "inverse_norm_bound");
  InverseNormReport rep;
  rep.bound.bound_name = "norm_C_inverse";
  const SparseMatrix& c = system.matrix;
  auto gram_inverse = [&c](const Vector& v) -> Vector { return adjoint_solve(c, lower_solve(c, v)); };
  const auto res = dominant_eigenpair(gram_inverse, c.cols(), kNormTolerance);
  rep.norm_inverse = std::sqrt(res.eigenvalue);
  rep.iterations = res.iterations;
  if (c.rows() <= dense_check_limit) {
    Eigen::BDCSVD<DenseMatrix> svd{DenseMatrix(c)};
    rep.dense_svd_norm_inverse = 1.0 / svd.singularValues()[svd.singularValues().size() - 1];
  }
  const double bound = 3.0 * inst.kappa_v() * std::sqrt(double(p.k)) * (p.m + p.p);
  rep.bound.record(rep.norm_inverse / bound, rep.norm_inverse, bound, describe(p, system.n));
  return rep;
}

ConditionReport condition_number_bound(const EncodedSystem& system, const Instance& inst,
                                       Eigen::Index dense_check_limit) {
  const TaylorParams& p = system.params;
  const auto norm = matrix_norm_bounds(system);
  const auto inv = inverse_norm_bound(system, inst, dense_check_limit);
  ConditionReport rep;
  rep.bound.bound_name = "kappa_C";
  rep.norm_c = norm.norm_c;
  rep.norm_inverse = inv.norm_inverse;
  rep.kappa_c = norm.norm_c * inv.norm_inverse;
  const double bound = 6.0 * inst.kappa_v() * p.k * (p.m + p.p);
  rep.bound.record(rep.kappa_c / bound, rep.kappa_c, bound, describe(p, system.n));
  return rep;
}

SolutionErrorReport solution_error_report(const Instance& inst, const TaylorParams& params,
                                          const BlockSolution& sol) {
  require_step_norm(inst, params, "solution_error_report");
  require_spectral_hypotheses(inst, params, "solution_error_report");
  SolutionErrorReport rep;
  rep.bound.bound_name = "solution_error";
  const double scale = inst.x_in().norm() + params.m * params.h * inst.b().norm();
  rep.resolution_floor = kResolutionFloor * inst.kappa_v() * scale;
  const double log_fact = log_factorial(params.k + 1);
  double worst = -1.0;
  int worst_j = 0;
  for (int j = 0; j <= params.m; ++j) {
    const Vector exact = reference_solution(inst, j * params.h);
    const double err = (exact - sol.block(BlockIndex{j, 0})).norm();
    const double bound =
        (j == 0 || scale == 0.0) ? 0.0
                                 : std::exp(std::log(2.8 * inst.kappa_v() * j * scale) - log_fact);
    rep.errors.push_back(err);
    rep.bounds.push_back(bound);
    double effective = bound;
    if (bound < rep.resolution_floor) {
      effective = rep.resolution_floor;
      if (j > 0) ++rep.floor_limited_steps;
    }
    const double ratio = safe_ratio(err, effective);
    if (ratio > worst) {
      worst = ratio;
      worst_j = j;
    }
  }
  rep.bound.record(worst, rep.errors[worst_j], std::max(rep.bounds[worst_j], rep.resolution_floor),
                   describe(params, inst.dim()) + ",j=" + std::to_string(worst_j));
  return rep;
}

DecayProfile estimate_decay(const Instance& inst, double t_final, int m) {
  if (m < 1) throw DomainError("estimate_decay: m must be >= 1");
  if (!(t_final > 0.0)) throw DomainError("estimate_decay: T must be positive");
  DecayProfile prof;
  const double h = t_final / m;
  for (int i = 0; i <= m; ++i) prof.norms.push_back(reference_solution(inst, i * h).norm());
  prof.q = prof.norms.back();
  if (!(prof.q >= 1e-300)) throw DegeneracyError("estimate_decay: ||x(T)|| vanishes");
  prof.g_grid = *std::max_element(prof.norms.begin(), prof.norms.end()) / prof.q;
  constexpr int kSub = 8;
  double refined = 0.0;
  for (int s = 0; s <= kSub * m; ++s) {
    const double t = s % kSub == 0 ? (s / kSub) * h : s * (h / kSub);
    refined = std::max(refined, s % kSub == 0 ? prof.norms[s / kSub] : reference_solution(inst, t).norm());
  }
  prof.g_refined = refined / prof.q;
  return prof;
}

bool success_hypothesis_holds(const Instance& inst, const TaylorParams& params, double xt_norm) {
  const double scale = inst.x_in().norm() + params.m * params.h * inst.b().norm();
  const double log_need = std::log(70.0 * inst.kappa_v() * params.m * scale / xt_norm);
  return log_factorial(params.k + 1) >= log_need;
}

SuccessProbabilityReport success_probability_report(const Instance& inst,
                                                    const TaylorParams& params,
                                                    const BlockSolution& sol) {
  return success_probability_report(inst, params, sol,
                                    estimate_decay(inst, params.m * params.h, params.m));
}

SuccessProbabilityReport success_probability_report(const Instance& inst,
                                                    const TaylorParams& params,
                                                    const BlockSolution& sol,
                                                    const DecayProfile& decay) {
  require_step_norm(inst, params, "success_probability_report");
  require_spectral_hypotheses(inst, params, "success_probability_report");
  if (!success_hypothesis_holds(inst, params, decay.q)) {
    throw HypothesisError(
        "success_probability_report: (k+1)! < 70 kappa_V m (||x_in|| + m h ||b||)/||x(mh)||");
  }
  SuccessProbabilityReport rep;
  rep.bound.bound_name = "success_amplitude";
  rep.g_grid = decay.g_grid;
  const double total = sol.norm();
  const double final_norm = sol.block(BlockIndex{params.m, 0}).norm();
  rep.ratio = final_norm / total;
  rep.lower_bound = 1.0 / std::sqrt(params.p + 77.0 * params.m * decay.g_grid * decay.g_grid);
  rep.success_probability = (params.p + 1) * rep.ratio * rep.ratio;
  const std::string id = describe(params, inst.dim());
  rep.bound.record(safe_ratio(rep.lower_bound, rep.ratio), rep.ratio, rep.lower_bound, id);
  if (params.p == params.m) {
    BoundReport eq;
    eq.bound_name = "success_probability_equal_padding";
    const double lb = 1.0 / (78.0 * decay.g_grid * decay.g_grid);
    eq.record(safe_ratio(lb, rep.success_probability), rep.success_probability, lb, id);
    rep.equal_padding = eq;
  }
  return rep;
}

double normalized_distance_bound(double alpha, double beta) {
  if (!(alpha > 0.0)) throw DomainError("normalized_distance_bound: alpha must be positive");
  return 2.0 * beta / alpha;
}

double conditional_distance_bound(double alpha, double delta) {
  if (!(delta < alpha)) throw DomainError("conditional_distance_bound: requires delta < alpha");
  return 2.0 * delta / (alpha - delta);
}

double amplitude_lower_bound(double alpha, double delta) { return alpha - delta; }

DistanceCheck check_normalized_distance(const Vector& psi, const Vector& phi, double alpha,
                                        double beta) {
  DistanceCheck out;
  if (psi.size() != phi.size()) throw DimensionError("check_normalized_distance: length mismatch");
  const double pn = psi.norm();
  const double fn = phi.norm();
  out.hypotheses_ok = alpha > 0.0 && pn >= alpha && (psi - phi).norm() <= beta && fn > 0.0;
  if (!out.hypotheses_ok) return out;
  out.observed = (psi / pn - phi / fn).norm();
  out.bound = normalized_distance_bound(alpha, beta);
  return out;
}

ConditionalCheck check_conditional_state(const Vector& psi, const Vector& phi, Eigen::Index head,
                                         double delta) {
  ConditionalCheck out;
  if (psi.size() != phi.size()) throw DimensionError("check_conditional_state: length mismatch");
  if (head < 1 || head > psi.size()) throw DomainError("check_conditional_state: bad split");
  const double alpha = psi.head(head).norm();
  const double beta = phi.head(head).norm();
  const bool ok = std::abs(psi.norm() - 1.0) <= 1e-12 && std::abs(phi.norm() - 1.0) <= 1e-12 &&
                  (psi - phi).norm() <= delta && delta < alpha && beta > 0.0;
  out.state.hypotheses_ok = ok;
  out.amplitude.hypotheses_ok = ok;
  if (!ok) return out;
  out.state.observed = (phi.head(head) / beta - psi.head(head) / alpha).norm();
  out.state.bound = conditional_distance_bound(alpha, delta);
  out.amplitude.observed = amplitude_lower_bound(alpha, delta);
  out.amplitude.bound = beta;
  return out;
}

namespace {

Vector random_unit(Eigen::Index n, std::mt19937_64& rng) { return normalized(random_complex_normal(n, rng)); }

// Unit vector orthogonal to the unit vector u (requires u.size() >= 2).
Vector random_orthogonal(const Vector& u, std::mt19937_64& rng) {
  for (;;) {
    Vector w = random_complex_normal(u.size(), rng);
    w -= u * u.dot(w);
    const double wn = w.norm();
    if (wn > 1e-8) return w / wn;
  }
}

}  // namespace

StateDistanceReport state_distance_checks(std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("state_distance_checks: trials must be >= 1");
  StateDistanceReport rep;
  rep.normalized.bound_name = "normalized_distance";
  rep.conditional.bound_name = "conditional_distance";
  rep.amplitude.bound_name = "amplitude_lower_bound";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);

  auto fail = [&rep](const std::string& what, std::size_t t) {
    if (rep.failures.size() < 32) rep.failures.push_back(what + " trial " + std::to_string(t));
  };

  for (std::size_t t = 0; rep.normalized.instances_checked < trials && t < 10 * trials; ++t) {
    // ||psi|| >= alpha, ||psi - phi|| <= beta
    const Eigen::Index n = dim(rng);
    const double scale = std::pow(10.0, -3.0 + 6.0 * unit(rng));
    const Vector psi = random_complex_normal(n, rng) * scale;
    const double pn = psi.norm();
    Vector phi;
    do {
      phi = psi + random_unit(n, rng) * (pn * 1.5 * unit(rng));
    } while (phi.norm() < 1e-12 * pn);
    const double actual = (psi - phi).norm();
    const double beta = unit(rng) < 0.5 ? actual : actual * (1.0 + unit(rng));
    const double alpha = pn * (0.05 + 0.95 * unit(rng));
    const auto c = check_normalized_distance(psi, phi, alpha, beta);
    if (!c.hypotheses_ok) {
      rep.normalized.record_not_claimed();
    } else {
      rep.normalized.record(safe_ratio(c.observed, c.bound), c.observed, c.bound, "trial " + std::to_string(t));
      if (!c.holds()) fail("normalized_distance", t);
    }
  }

  // Two-component unit states, drawn until `trials` of them satisfy the
  // hypotheses; rejected draws are counted as not claimed.
  for (BoundReport* target : {&rep.conditional, &rep.amplitude}) {
    const bool state_check = target == &rep.conditional;
    std::size_t draws = 0;
    while (target->instances_checked < trials) {
      if (++draws > 10 * trials) {
        fail(target->bound_name + ": too many rejected draws", draws);
        break;
      }
      const Eigen::Index n0 = dim(rng) % 4 + 1;
      const Eigen::Index n1 = dim(rng) % 4 + 1;
      const double alpha = 1e-3 + (1.0 - 1e-3) * unit(rng);
      Vector psi(n0 + n1);
      psi.head(n0) = alpha * random_unit(n0, rng);
      psi.tail(n1) = std::sqrt(std::max(0.0, 1.0 - alpha * alpha)) * random_unit(n1, rng);
      psi.normalize();
      const double delta = alpha * unit(rng);
      const double dist = unit(rng) < 0.3 ? delta : delta * unit(rng);
      const double theta = 2.0 * std::asin(std::min(1.0, dist / 2.0));
      const Vector w = random_orthogonal(psi, rng);
      const Vector phi = std::cos(theta) * psi + std::sin(theta) * w;
      const auto c = check_conditional_state(psi, phi, n0, delta);
      const DistanceCheck& d = state_check ? c.state : c.amplitude;
      if (!d.hypotheses_ok) {
        target->record_not_claimed();
        continue;
      }
      target->record(safe_ratio(d.observed, d.bound), d.observed, d.bound, "draw " + std::to_string(draws));
      if (!d.holds()) fail(target->bound_name, draws);
    }
  }
  return rep;
}

}  // namespace odeql
