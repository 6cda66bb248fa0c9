#include "odeql/suites.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "odeql/pipeline.hpp"
#include "odeql/taylor.hpp"

namespace odeql {

namespace {

constexpr double kCrossCheckTolerance = 1e-4;

void add_failure(SuiteResult& r, const std::string& what) {
  if (r.failures.size() < 64) r.failures.push_back(what);
}

BoundReport named(const std::string& name) {
  BoundReport b;
  b.bound_name = name;
  return b;
}

std::string complex_text(Complex z) {
  std::ostringstream os;
  os.precision(6);
  os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return os.str();
}

void check_bound(SuiteResult& r, const BoundReport& b) {
  if (b.instances_checked > 0 && !b.passed()) {
    std::ostringstream os;
    os.precision(6);
    os << b.bound_name << " violated at " << b.argmax_instance << ": observed " << b.observed_at_worst
       << ", bound " << b.bound_at_worst << " (ratio " << b.worst_ratio << ")";
    add_failure(r, os.str());
  }
}

void finish(SuiteResult& r) {
  for (const auto& b : r.bounds) check_bound(r, b);
}

EigenProfile profile_for(std::size_t idx) {
  static const EigenProfile cycle[] = {EigenProfile::kUniformHalfDisk, EigenProfile::kBoundary,
                                       EigenProfile::kPureImaginary};
  return cycle[idx % 3];
}

std::optional<FamilyMember> make_member(const GenSpec& spec, int m, double eps, const std::string& id) {
  Instance inst = generate(spec);
  const double na = inst.norm_a();
  const double h = na > 0.0 ? 1.0 / (na * (1.0 + 1e-6)) : 1.0;
  const DecayProfile decay = estimate_decay(inst, m * h, m);
  const double scale = inst.x_in().norm() + m * h * inst.b().norm();
  const double log_omega = std::log(70.0 * decay.g_grid * inst.kappa_v()) + 1.5 * std::log(double(m)) +
                           std::log(scale) - std::log(eps) - std::log(decay.q);
  if (log_omega < std::log(70.0)) return std::nullopt;
  const TruncationOrder order = truncation_order(log_omega, m);
  TaylorParams p{m, order.k, m, h};
  std::ostringstream os;
  os << id << "," << to_string(spec) << ",m=" << m << ",k=" << p.k << ",eps=" << eps;
  return FamilyMember{os.str(), std::move(inst), p};
}

}  // namespace

bool SuiteResult::passed() const {
  if (!failures.empty()) return false;
  for (const auto& b : bounds) {
    if (b.instances_checked > 0 && !b.passed()) return false;
  }
  return true;
}

std::vector<FamilyMember> instance_family(const SuiteOptions& opt) {
  std::vector<FamilyMember> out;
  std::size_t idx = 0;
  for (Eigen::Index n : opt.dims) {
    for (double kappa : opt.kappas) {
      if (n == 1 && kappa != 1.0) continue;
      for (BMode bm : {BMode::kZero, BMode::kRandom}) {
        for (int m : opt.steps) {
          for (double eps : opt.epsilons) {
            GenSpec spec;
            spec.n = n;
            spec.kappa = kappa;
            spec.profile = profile_for(idx);
            spec.b_mode = bm;
            spec.seed = opt.seed * 1000003ULL + idx;
            ++idx;
            if (auto mem = make_member(spec, m, eps, "#" + std::to_string(idx - 1))) out.push_back(std::move(*mem));
          }
        }
      }
    }
  }
  // Sparse mode: exact pattern, measured kappa_V.
  for (Eigen::Index n : {Eigen::Index(8), Eigen::Index(16)}) {
    for (int m : opt.steps) {
      GenSpec spec;
      spec.n = n;
      spec.sparsity = 3;
      spec.seed = opt.seed * 1000003ULL + idx;
      ++idx;
      if (auto mem = make_member(spec, m, opt.epsilons.front(), "#" + std::to_string(idx - 1))) {
        out.push_back(std::move(*mem));
      }
    }
  }
  return out;
}

SuiteResult taylor_suite(const SuiteOptions& opt) {
  SuiteResult r;
  r.name = "taylor";
  const std::size_t samples = std::max<std::size_t>(1000, 20 * opt.trials);
  const RemainderReport rep = verify_remainder_bounds(samples, 5, 20, opt.seed);
  r.detail["samples"] = rep.samples;
  r.detail["k_range"] = {rep.k_lo, rep.k_hi};
  for (const auto& b : rep.bounds) {
    r.detail["bounds"].push_back({{"name", b.name},
                                  {"worst_slack", b.worst_slack},
                                  {"argmax_z", {b.argmax_z.real(), b.argmax_z.imag()}},
                                  {"argmax_k", b.argmax_k},
                                  {"argmax_b", b.argmax_b},
                                  {"checks", b.checks},
                                  {"violations", b.violations}});
    BoundReport br = named(b.name);
    br.instances_checked = b.checks;
    br.worst_ratio = b.worst_ratio;
    br.observed_at_worst = b.observed_at_worst_ratio;
    br.bound_at_worst = b.bound_at_worst_ratio;
    br.argmax_instance = "least slack at z=" + complex_text(b.argmax_z) + ",k=" + std::to_string(b.argmax_k) +
                         (b.argmax_b >= 0 ? ",b=" + std::to_string(b.argmax_b) : "");
    r.bounds.push_back(br);
  }
  for (const auto& f : rep.failures) add_failure(r, f);
  return r;
}

SuiteResult inverse_column_suite(const SuiteOptions& opt) {
  SuiteResult r;
  r.name = "lemma1";
  BoundReport norm_rep = named("inverse_column_norm");
  BoundReport entry_rep = named("inverse_column_entry");

  std::vector<Complex> lambdas;
  for (int t = 0; t <= 8; ++t) {
    Complex z = std::polar(1.0, std::numbers::pi / 2.0 + std::numbers::pi * t / 8.0);
    if (z.real() > 0.0) z = Complex(0.0, z.imag());
    lambdas.push_back(z);
  }
  for (double y : {-1.0, -0.5, 0.0, 0.5, 1.0}) lambdas.emplace_back(0.0, y);
  std::mt19937_64 rng(opt.seed);
  const std::size_t interior = std::min<std::size_t>(opt.trials, 32);
  for (std::size_t i = 0; i < interior; ++i) lambdas.push_back(sample_half_disk(rng));

  for (const Complex lam : lambdas) {
    for (int m = 1; m <= 8; ++m) {
      for (int p = 1; p <= 8; ++p) {
        for (int k = 5; k <= 12; ++k) {
          const TaylorParams params{m, k, p, 1.0};
          const auto rep = scalar_inverse_columns(lam, params);
          std::ostringstream id;
          id.precision(17);
          id << "lambda=" << lam.real() << (lam.imag() < 0 ? "" : "+") << lam.imag() << "i,m=" << m
             << ",k=" << k << ",p=" << p;
          norm_rep.record(rep.worst_norm / rep.norm_bound, rep.worst_norm, rep.norm_bound,
                          id.str() + ",col=" + std::to_string(rep.worst_norm_column));
          entry_rep.record(rep.worst_entry / rep.entry_bound, rep.worst_entry, rep.entry_bound,
                           id.str() + ",col=" + std::to_string(rep.worst_entry_column) + ",row=" +
                               std::to_string(rep.worst_entry_row));
        }
      }
    }
  }
  r.detail["lambdas"] = lambdas.size();
  r.bounds = {norm_rep, entry_rep};
  finish(r);
  return r;
}

SuiteResult spectral_suite(const SuiteOptions& opt, const std::vector<std::string>& which) {
  auto wants = [&which](const char* s) { return std::find(which.begin(), which.end(), s) != which.end(); };
  const bool want_inverse = wants("lemma2") || wants("thm1");
  const bool want_norm = wants("lemma3") || wants("thm1");
  SuiteResult r;
  r.name = which.size() == 1 ? which.front() : "spectral";
  BoundReport inv_rep = named("norm_C_inverse");
  BoundReport norm_rep = named("norm_C");
  BoundReport cond_rep = named("kappa_C");
  std::size_t cross_checks = 0;
  double worst_cross = 0.0;
  int max_iterations = 0;

  for (const auto& mem : instance_family(opt)) {
    const Instance& inst = mem.instance;
    try {
      const EncodedSystem sys = encode(inst.a_sparse(), inst.x_in(), inst.b(), mem.params, inst.norm_a());
      std::optional<MatrixNormReport> nr;
      std::optional<InverseNormReport> ir;
      if (want_norm) {
        nr = matrix_norm_bounds(sys);
        nr->bound.argmax_instance = mem.id;
        norm_rep.merge(nr->bound);
        if (!nr->components_ok) {
          add_failure(r, "component norms off at " + mem.id + ": ||C2|| = " + std::to_string(nr->norm_c2) +
                             ", ||C3|| = " + std::to_string(nr->norm_c3));
        }
      }
      if (want_inverse) {
        ir = inverse_norm_bound(sys, inst, opt.dense_check_limit);
        BoundReport b = ir->bound;
        b.argmax_instance = mem.id;
        inv_rep.merge(b);
        max_iterations = std::max(max_iterations, ir->iterations);
        if (ir->dense_svd_norm_inverse) {
          ++cross_checks;
          const double rel = std::abs(*ir->dense_svd_norm_inverse - ir->norm_inverse) / *ir->dense_svd_norm_inverse;
          worst_cross = std::max(worst_cross, rel);
          if (rel > kCrossCheckTolerance) {
            add_failure(r, "power iteration and dense SVD disagree on ||C^-1|| at " + mem.id);
          }
        }
      }
      if (nr && ir) {
        const TaylorParams& p = mem.params;
        const double kc = nr->norm_c * ir->norm_inverse;
        const double bound = 6.0 * inst.kappa_v() * p.k * (p.m + p.p);
        cond_rep.record(kc / bound, kc, bound, mem.id);
      }
    } catch (const HypothesisError&) {
      ++r.not_claimed;
    } catch (const ConvergenceError& e) {
      add_failure(r, std::string(e.what()) + " at " + mem.id);
    }
  }
  if (wants("lemma2")) r.bounds.push_back(inv_rep);
  if (wants("lemma3")) r.bounds.push_back(norm_rep);
  if (wants("thm1")) r.bounds.push_back(cond_rep);
  r.detail["dense_cross_checks"] = cross_checks;
  r.detail["worst_cross_check_relative"] = worst_cross;
  r.detail["max_inverse_iterations"] = max_iterations;
  finish(r);
  return r;
}

SuiteResult solution_error_suite(const SuiteOptions& opt) {
  SuiteResult r;
  r.name = "thm2";
  BoundReport rep = named("solution_error");
  std::size_t floor_limited = 0;
  std::size_t steps = 0;
  for (const auto& mem : instance_family(opt)) {
    const Instance& inst = mem.instance;
    try {
      const BlockSolution sol = forward_substitute(inst.a_sparse(), mem.params, inst.x_in(), inst.b(), inst.norm_a());
      SolutionErrorReport se = solution_error_report(inst, mem.params, sol);
      se.bound.argmax_instance = mem.id + "," + se.bound.argmax_instance.substr(se.bound.argmax_instance.rfind(',') + 1);
      rep.merge(se.bound);
      floor_limited += se.floor_limited_steps;
      steps += se.errors.size() - 1;
    } catch (const HypothesisError&) {
      ++r.not_claimed;
    }
  }
  r.detail["steps_checked"] = steps;
  r.detail["floor_limited_steps"] = floor_limited;
  r.bounds = {rep};
  finish(r);
  return r;
}

SuiteResult success_suite(const SuiteOptions& opt) {
  SuiteResult r;
  r.name = "thm3";
  BoundReport amp = named("success_amplitude");
  BoundReport eq = named("success_probability_equal_padding");
  BoundReport injected = named("success_probability_injected");
  BoundReport rounds = named("amplification_rounds");
  BoundReport fidelity = named("end_to_end_fidelity");
  std::size_t injection_checks = 0;
  for (const auto& mem : instance_family(opt)) {
    const Instance& inst = mem.instance;
    const TaylorParams& p = mem.params;
    try {
      const BlockSolution sol = forward_substitute(inst.a_sparse(), p, inst.x_in(), inst.b(), inst.norm_a());
      const DecayProfile decay = estimate_decay(inst, p.m * p.h, p.m);
      SuccessProbabilityReport sp = success_probability_report(inst, p, sol, decay);
      sp.bound.argmax_instance = mem.id;
      amp.merge(sp.bound);
      if (sp.equal_padding) {
        sp.equal_padding->argmax_instance = mem.id;
        eq.merge(*sp.equal_padding);
      }
    } catch (const HypothesisError&) {
      ++r.not_claimed;
    }

    RunConfig cfg;
    cfg.t_final = p.m * p.h;
    cfg.epsilon = opt.epsilons.front();
    cfg.seed = opt.seed;
    cfg.delta_injection = DeltaInjection::automatic();
    const PipelineReport rep = run(inst, cfg);
    if (!rep.success_hypothesis) {
      ++r.not_claimed;
      continue;
    }
    const double lb = 1.0 / (121.0 * rep.g_grid * rep.g_grid);
    injected.record(lb / rep.success_prob, rep.success_prob, lb, mem.id);
    rounds.record(double(rep.amplification_rounds) / rep.amplification_limit, rep.amplification_rounds,
                  rep.amplification_limit, mem.id);
    fidelity.record(rep.worst_success_fidelity / cfg.epsilon, rep.worst_success_fidelity, cfg.epsilon, mem.id);
    for (const auto& ic : rep.injection_checks) {
      ++injection_checks;
      if (!ic.check.state.holds() || !ic.check.amplitude.holds()) {
        add_failure(r, "injected block " + std::to_string(ic.flat_index) + " breaks the conditional-state bounds at " + mem.id);
      }
    }
  }
  r.detail["injection_checks"] = injection_checks;
  r.bounds = {amp, eq, injected, rounds, fidelity};
  finish(r);
  return r;
}

SuiteResult state_distance_suite(const SuiteOptions& opt) {
  SuiteResult r;
  r.name = "appendixB";
  const std::size_t trials = std::max<std::size_t>(1000, 200 * opt.trials);
  const StateDistanceReport rep = state_distance_checks(trials, opt.seed);
  r.bounds = {rep.normalized, rep.conditional, rep.amplitude};
  for (const auto& f : rep.failures) add_failure(r, f);
  r.not_claimed = rep.normalized.not_claimed + rep.conditional.not_claimed + rep.amplitude.not_claimed;
  r.detail["trials_each"] = trials;
  finish(r);
  return r;
}

std::vector<SuiteResult> run_suites(const std::string& name, const SuiteOptions& opt) {
  if (name == "taylor") return {taylor_suite(opt)};
  if (name == "lemma1") return {inverse_column_suite(opt)};
  if (name == "lemma2" || name == "lemma3" || name == "thm1") return {spectral_suite(opt, {name})};
  if (name == "thm2") return {solution_error_suite(opt)};
  if (name == "thm3") return {success_suite(opt)};
  if (name == "appendixB") return {state_distance_suite(opt)};
  if (name == "all") {
    return {taylor_suite(opt), inverse_column_suite(opt), spectral_suite(opt, {"lemma2", "lemma3", "thm1"}),
            solution_error_suite(opt),   success_suite(opt),   state_distance_suite(opt)};
  }
  throw ParameterError("unknown suite '" + name + "'");
}

nlohmann::json to_json(const BoundReport& r) {
  return {{"bound", r.bound_name},
          {"instances_checked", r.instances_checked},
          {"not_claimed", r.not_claimed},
          {"worst_ratio", r.worst_ratio},
          {"argmax_instance", r.argmax_instance},
          {"observed_at_worst", r.observed_at_worst},
          {"bound_at_worst", r.bound_at_worst},
          {"hypotheses_ok", r.hypotheses_ok},
          {"passed", r.passed()}};
}

nlohmann::json to_json(const SuiteResult& r) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : r.bounds) bounds.push_back(to_json(b));
  return {{"suite", r.name},
          {"passed", r.passed()},
          {"not_claimed", r.not_claimed},
          {"bounds", bounds},
          {"failures", r.failures},
          {"detail", r.detail}};
}

}  // namespace odeql
