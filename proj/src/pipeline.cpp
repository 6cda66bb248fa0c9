#include "odeql/pipeline.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace odeql {

namespace {

constexpr double kNormInflation = 1e-6;
constexpr double kProbabilityTolerance = 1e-12;

}  // namespace

int step_count(double t_final, double norm_a) {
  const double steps = std::ceil(t_final * norm_a * (1.0 + kNormInflation));
  if (!(steps < 1e7)) throw ParameterError("step_count: T ||A|| too large");
  return std::max(1, static_cast<int>(steps));
}

namespace {

// Unit vector orthogonal to the unit vector u.
Vector random_orthogonal(const Vector& u, std::mt19937_64& rng) {
  if (u.size() < 2) throw DimensionError("delta injection needs at least two amplitudes");
  for (;;) {
    Vector w = random_complex_normal(u.size(), rng);
    w -= u * u.dot(w);
    const double wn = w.norm();
    if (wn > 1e-8) return w / wn;
  }
}

// Block `flat` moved to the front, the remaining blocks in order.
Vector block_first(const Vector& x, int flat, Eigen::Index n) {
  Vector out(x.size());
  out.head(n) = x.segment(Eigen::Index(flat) * n, n);
  Eigen::Index pos = n;
  const Eigen::Index blocks = x.size() / n;
  for (Eigen::Index l = 0; l < blocks; ++l) {
    if (l == flat) continue;
    out.segment(pos, n) = x.segment(l * n, n);
    pos += n;
  }
  return out;
}

double uniform53(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1p-53; }

}  // namespace

DeltaInjection DeltaInjection::parse(const std::string& s) {
  if (s == "off" || s == "none") return off();
  if (s == "auto") return automatic();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParameterError("inject-delta: expected off, auto or a number, got '" + s + "'");
  }
  if (used != s.size() || !(v >= 0.0) || v > 2.0) {
    throw ParameterError("inject-delta: value must lie in [0, 2]");
  }
  return fixed(v);
}

void RunConfig::validate() const {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ParameterError("run: T must be positive");
  if (!(epsilon > 0.0) || epsilon > 0.5) throw ParameterError("run: epsilon must lie in (0, 1/2]");
  if (delta_injection.mode == DeltaInjection::Mode::kValue &&
      (!(delta_injection.value >= 0.0) || delta_injection.value > 2.0)) {
    throw ParameterError("run: injected delta must lie in [0, 2]");
  }
}

TruncationOrder truncation_order(double log_omega, int m) {
  if (!(log_omega >= std::log(70.0) - 1e-12)) throw ParameterError("truncation_order: Omega < 70");
  if (m < 1) throw ParameterError("truncation_order: m must be >= 1");
  TruncationOrder out;
  const double lnln = std::log(log_omega);
  out.growth_limit = 2.0 * log_omega / lnln + 2.0;
  out.k_formula = static_cast<int>(std::floor(2.0 * log_omega / lnln));
  out.k = std::max(out.k_formula, 5);
  while (log_factorial(out.k + 1) < log_omega || log_factorial(out.k + 1) < std::log(2.0 * m)) {
    ++out.k;
    ++out.increments;
  }
  return out;
}

ParameterChoice choose_parameters(double t_final, double norm_a, double epsilon, double g,
                                  double kappa_v, double x_in_norm, double b_norm,
                                  double xt_norm) {
  for (double v : {t_final, norm_a, epsilon, g, kappa_v, x_in_norm, b_norm, xt_norm}) {
    if (!std::isfinite(v)) throw ParameterError("choose_parameters: non-finite input");
  }
  if (!(t_final > 0.0)) throw ParameterError("choose_parameters: T must be positive");
  if (norm_a < 0.0) throw ParameterError("choose_parameters: ||A|| must be nonnegative");
  if (!(epsilon > 0.0) || epsilon > 0.5) throw ParameterError("choose_parameters: epsilon must lie in (0, 1/2]");
  if (!(g > 0.0) || !(kappa_v > 0.0) || !(xt_norm > 0.0)) {
    throw ParameterError("choose_parameters: g, kappa_V and ||x(T)|| must be positive");
  }
  const double scale = x_in_norm + t_final * b_norm;
  if (!(scale > 0.0)) throw ParameterError("choose_parameters: ||x_in|| + T ||b|| must be positive");

  ParameterChoice out;
  const int m = step_count(t_final, norm_a);
  out.params.m = m;
  out.params.p = m;
  out.params.h = t_final / m;
  out.delta = epsilon / (25.0 * std::sqrt(double(m)) * g);
  out.log_omega = std::log(70.0) + std::log(g) + std::log(kappa_v) + 1.5 * std::log(double(m)) +
                  std::log(scale) - std::log(epsilon) - std::log(xt_norm);
  if (out.log_omega < std::log(70.0) - 1e-12) {
    throw ParameterError("choose_parameters: Omega = " + std::to_string(std::exp(out.log_omega)) +
                         " < 70");
  }
  const TruncationOrder order = truncation_order(out.log_omega, m);
  const int k = order.k;
  out.k_formula = order.k_formula;
  out.k_increments = order.increments;
  out.k_growth_limit = order.growth_limit;
  out.params.k = k;
  out.factorial_slack = log_factorial(k + 1) - out.log_omega;
  out.params.validate();
  return out;
}

int amplification_estimate(double success_prob) {
  if (!(success_prob > 0.0)) throw DegeneracyError("amplification_estimate: zero success probability");
  if (success_prob > 1.0 + kProbabilityTolerance) {
    throw DomainError("amplification_estimate: probability above 1");
  }
  // Exact squares such as 1/121 must not round up past their root.
  const double r = 1.0 / std::sqrt(success_prob);
  const double nearest = std::round(r);
  if (std::abs(r - nearest) <= 1e-12 * nearest) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(r));
}

int amplification_round_limit(double g) { return static_cast<int>(std::ceil(12.0 * g)); }

PipelineReport run(const Instance& inst, const RunConfig& cfg) {
  cfg.validate();
  PipelineReport rep;
  rep.config = cfg;
  rep.norm_a = inst.norm_a();
  rep.kappa_v = inst.kappa_v();
  const int m = step_count(cfg.t_final, rep.norm_a);
  const DecayProfile decay = estimate_decay(inst, cfg.t_final, m);
  rep.g_grid = decay.g_grid;
  rep.g_refined = decay.g_refined;
  rep.xt_norm = decay.q;
  const double x_in_norm = inst.x_in().norm();
  const double b_norm = inst.b().norm();
  rep.beta = (x_in_norm + cfg.t_final * b_norm) / rep.xt_norm;

  rep.choice = choose_parameters(cfg.t_final, rep.norm_a, cfg.epsilon, rep.g_grid, rep.kappa_v,
                                 x_in_norm, b_norm, rep.xt_norm);
  rep.params = rep.choice.params;
  rep.log_omega = rep.choice.log_omega;
  rep.delta_target = rep.choice.delta;
  const TaylorParams& p = rep.params;
  const Eigen::Index n = inst.dim();

  const BlockSolution sol = forward_substitute(inst.a_sparse(), p, inst.x_in(), inst.b(), rep.norm_a);
  const Vector exact = sol.flat() / sol.norm();

  switch (cfg.delta_injection.mode) {
    case DeltaInjection::Mode::kOff: rep.delta = 0.0; break;
    case DeltaInjection::Mode::kAuto: rep.delta = rep.delta_target; break;
    case DeltaInjection::Mode::kValue: rep.delta = cfg.delta_injection.value; break;
  }
  Vector state = exact;
  if (rep.delta > 0.0) {
    // Rotate toward a random orthogonal direction so that ||x - x'|| = delta.
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 1u};
    std::mt19937_64 inject_rng(seq);
    const Vector w = random_orthogonal(exact, inject_rng);
    const double theta = 2.0 * std::asin(rep.delta / 2.0);
    state = std::cos(theta) * exact + std::sin(theta) * w;
  }

  const int blocks = static_cast<int>(p.blocks());
  rep.block_probabilities.resize(blocks);
  for (int l = 0; l < blocks; ++l) {
    const double exact_l = exact.segment(Eigen::Index(l) * n, n).squaredNorm();
    rep.block_probabilities[l] = state.segment(Eigen::Index(l) * n, n).squaredNorm();
    rep.probability_sum += rep.block_probabilities[l];
    if (in_success_set(l, p)) {
      rep.success_prob += rep.block_probabilities[l];
      rep.success_prob_exact += exact_l;
    }
  }
  if (std::abs(rep.probability_sum - 1.0) > kProbabilityTolerance) {
    throw IntegrityError("run: block probabilities sum to " + std::to_string(rep.probability_sum));
  }

  std::mt19937_64 rng(cfg.seed);
  const double u = uniform53(rng) * rep.probability_sum;
  double cdf = 0.0;
  int chosen = -1;
  for (int l = 0; l < blocks; ++l) {
    cdf += rep.block_probabilities[l];
    if (u < cdf) {
      chosen = l;
      break;
    }
  }
  if (chosen < 0) {
    for (int l = blocks - 1; l >= 0; --l) {
      if (rep.block_probabilities[l] > 0.0) {
        chosen = l;
        break;
      }
    }
  }
  rep.sampled_flat = chosen;
  rep.sampled_index = unflatten(chosen, p);
  rep.success_flag = in_success_set(chosen, p);

  const Vector target = reference_solution(inst, cfg.t_final) / rep.xt_norm;
  const Vector block = state.segment(Eigen::Index(chosen) * n, n);
  rep.output_state = block / block.norm();
  rep.fidelity_error = (rep.output_state - target).norm();
  for (int l = p.m * (p.k + 1); l <= p.d(); ++l) {
    const Vector bl = state.segment(Eigen::Index(l) * n, n);
    const double bn = bl.norm();
    const double err = bn > 0.0 ? (bl / bn - target).norm() : std::numeric_limits<double>::infinity();
    rep.worst_success_fidelity = std::max(rep.worst_success_fidelity, err);
  }

  const double scale = x_in_norm + p.m * p.h * b_norm;
  const double err_bound = std::exp(std::log(2.8 * rep.kappa_v * p.m * scale) - log_factorial(p.k + 1));
  const double floor = kResolutionFloor * rep.kappa_v * scale;
  rep.exact_fidelity_bound = normalized_distance_bound(rep.xt_norm, std::max(err_bound, floor));

  if (rep.delta > 0.0) {
    for (int l = p.m * (p.k + 1); l <= p.d(); ++l) {
      InjectionCheck ic;
      ic.flat_index = l;
      ic.alpha = exact.segment(Eigen::Index(l) * n, n).norm();
      ic.beta = state.segment(Eigen::Index(l) * n, n).norm();
      const Vector psi = block_first(exact, l, n);
      const Vector phi = block_first(state, l, n);
      // The rotation gives distance delta up to rounding; use the measured value if larger.
      ic.check = check_conditional_state(psi, phi, n, std::max(rep.delta, (psi - phi).norm()));
      rep.injection_checks.push_back(ic);
    }
  }

  rep.amplification_rounds = amplification_estimate(rep.success_prob);
  rep.amplification_limit = amplification_round_limit(rep.g_grid);
  rep.success_hypothesis = p.bound_hypotheses_hold() && success_hypothesis_holds(inst, p, rep.xt_norm);
  return rep;
}

bool SweepResult::passed() const {
  for (const auto& r : rows) {
    if (!r.passed) return false;
  }
  return !rows.empty();
}

SweepResult sweep(const SweepConfig& cfg) {
  SweepResult out;
  for (double kappa : cfg.kappas) {
    GenSpec spec = cfg.base;
    spec.kappa = kappa;
    if (spec.n == 1 && kappa != 1.0) continue;
    const Instance inst = generate(spec);
    for (double t : cfg.t_values) {
      for (double eps : cfg.epsilons) {
        RunConfig rc;
        rc.t_final = t;
        rc.epsilon = eps;
        rc.seed = cfg.seed;
        rc.delta_injection = cfg.delta_injection;
        const PipelineReport rep = run(inst, rc);
        SweepRow row;
        row.t_final = t;
        row.epsilon = eps;
        row.kappa = kappa;
        row.k = rep.params.k;
        row.d = rep.params.d();
        row.m = rep.params.m;
        row.log_omega = rep.log_omega;
        row.k_growth_limit = rep.choice.k_growth_limit;
        row.success_prob = rep.success_prob;
        row.fidelity_error = rep.fidelity_error;
        row.worst_success_fidelity = rep.worst_success_fidelity;
        row.success_flag = rep.success_flag;
        row.passed = rep.worst_success_fidelity <= eps && row.k <= row.k_growth_limit;
        out.rows.push_back(row);
      }
    }
  }
  return out;
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "epsilon,k,d,success_prob,fidelity_error,T,kappa,m,log_omega,k_limit,worst_success_fidelity,"
        "success_flag,passed\n";
  for (const auto& r : result.rows) {
    os << r.epsilon << ',' << r.k << ',' << r.d << ',' << r.success_prob << ',' << r.fidelity_error << ','
       << r.t_final << ',' << r.kappa << ',' << r.m << ',' << r.log_omega << ',' << r.k_growth_limit << ','
       << r.worst_success_fidelity << ',' << (r.success_flag ? 1 : 0) << ',' << (r.passed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace odeql
