#include "odeql/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "odeql/io.hpp"
#include "odeql/suites.hpp"

namespace odeql {

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ODEQL_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ParameterError(std::string("ODEQL_SEED is not an integer: ") + env);
    }
  }
  return 1;
}

std::string command_line(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    std::string a = argv[i];
    if (a.find_first_of(" \t\"'") != std::string::npos) a = "'" + a + "'";
    if (i) out += ' ';
    out += a;
  }
  return out;
}

void emit(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(path, j);
  }
}

nlohmann::json params_json(const TaylorParams& p) {
  return {{"m", p.m}, {"k", p.k}, {"p", p.p}, {"h", p.h}, {"d", p.d()}};
}

// Where an instance comes from: a JSON file, a generator spec, or raw files.
struct InstanceSource {
  std::string instance_path;
  std::string gen;
  std::string matrix_path;
  std::string b_path;
  std::string x_in_path;

  void attach(CLI::App* app) {
    app->add_option("--instance", instance_path, "instance JSON written by gen");
    app->add_option("--gen", gen, "generator spec such as \"N=4,kappa=3\"");
    app->add_option("--matrix", matrix_path, "Matrix Market file for A");
    app->add_option("--b", b_path, "vector file for b (default zero)");
    app->add_option("--x-in", x_in_path, "vector file for x_in");
  }

  Instance load(std::uint64_t seed) const {
    const int given = !instance_path.empty() + !gen.empty() + !matrix_path.empty();
    if (given != 1) throw ParameterError("give exactly one of --instance, --gen or --matrix");
    if (!instance_path.empty()) return instance_from_json(read_json(instance_path));
    if (!gen.empty()) return generate(parse_gen_spec(gen, seed));
    const DenseMatrix a = DenseMatrix(read_matrix_market(matrix_path));
    if (x_in_path.empty()) throw ParameterError("--matrix needs --x-in");
    const Vector x_in = read_vector(x_in_path);
    const Vector b = b_path.empty() ? Vector(Vector::Zero(a.rows())) : read_vector(b_path);
    return instance_from_matrix(a, b, x_in);
  }
};

struct ParamFlags {
  int m = 1;
  int k = 5;
  int p = 0;
  double h = 0.0;
  std::string params_path;

  void attach(CLI::App* app) {
    app->add_option("--m", m, "time steps")->check(CLI::PositiveNumber);
    app->add_option("--k", k, "truncation order")->check(CLI::PositiveNumber);
    app->add_option("--p", p, "padding (default m)");
    app->add_option("--step", h, "step size h (default 1/||A||)");
    app->add_option("--params", params_path,
                    "JSON with {m, k, p, h}, or {T, epsilon} to choose them automatically");
  }

  TaylorParams resolve(const Instance& inst) const {
    if (!params_path.empty()) return from_file(inst);
    TaylorParams out{m, k, p > 0 ? p : m, h};
    if (h <= 0.0) {
      const double na = inst.norm_a();
      out.h = na > 0.0 ? 1.0 / (na * (1.0 + 1e-6)) : 1.0;
    }
    out.validate();
    return out;
  }

  TaylorParams from_file(const Instance& inst) const {
    const nlohmann::json j = read_json(params_path);
    if (j.contains("T") || j.contains("epsilon")) {
      const double t = j.at("T").get<double>();
      const double eps = j.at("epsilon").get<double>();
      const double xin = inst.x_in().norm();
      const double bn = inst.b().norm();
      const DecayProfile decay = estimate_decay(inst, t, step_count(t, inst.norm_a()));
      return choose_parameters(t, inst.norm_a(), eps, decay.g_grid, inst.kappa_v(), xin, bn, decay.q).params;
    }
    TaylorParams out;
    out.m = j.at("m").get<int>();
    out.k = j.at("k").get<int>();
    out.p = j.value("p", out.m);
    out.h = j.at("h").get<double>();
    out.validate();
    return out;
  }
};

BlockIndex parse_block(const std::string& s) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ParameterError("--block expects i,j but got '" + s + "'");
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParameterError("bad number in list: '" + item + "'");
    }
  }
  if (out.empty()) throw ParameterError("empty list");
  return out;
}

}  // namespace

bool run_violates_bounds(const PipelineReport& rep) {
  for (const auto& ic : rep.injection_checks) {
    if (!ic.check.state.holds() || !ic.check.amplitude.holds()) return true;
  }
  if (!rep.success_hypothesis) return false;
  const bool within_delta = rep.delta <= rep.delta_target * (1.0 + kBoundSlack);
  if (within_delta) {
    if (rep.worst_success_fidelity > rep.config.epsilon) return true;
    if (rep.success_prob * 121.0 * rep.g_grid * rep.g_grid < 1.0 - kBoundSlack) return true;
    if (rep.amplification_rounds > rep.amplification_limit) return true;
  }
  if (rep.delta == 0.0 && rep.worst_success_fidelity > rep.exact_fidelity_bound * (1.0 + kBoundSlack)) {
    return true;
  }
  return false;
}

nlohmann::json report_json(const PipelineReport& rep) {
  nlohmann::json inj = nlohmann::json::array();
  for (const auto& ic : rep.injection_checks) {
    inj.push_back({{"flat_index", ic.flat_index},
                   {"alpha", ic.alpha},
                   {"beta", ic.beta},
                   {"hypotheses_ok", ic.check.state.hypotheses_ok},
                   {"state_distance", ic.check.state.observed},
                   {"state_bound", ic.check.state.bound},
                   {"amplitude_lower_bound", ic.check.amplitude.observed},
                   {"holds", ic.check.state.holds() && ic.check.amplitude.holds()}});
  }
  std::string inject = "off";
  if (rep.config.delta_injection.mode == DeltaInjection::Mode::kAuto) inject = "auto";
  if (rep.config.delta_injection.mode == DeltaInjection::Mode::kValue) {
    inject = std::to_string(rep.config.delta_injection.value);
  }
  return {{"schema", kReportSchema},
          {"kind", "run"},
          {"config",
           {{"T", rep.config.t_final}, {"epsilon", rep.config.epsilon}, {"seed", rep.config.seed}, {"inject_delta", inject}}},
          {"params", params_json(rep.params)},
          {"k_formula", rep.choice.k_formula},
          {"k_increments", rep.choice.k_increments},
          {"k_growth_limit", rep.choice.k_growth_limit},
          {"factorial_slack_log", rep.choice.factorial_slack},
          {"log_Omega", rep.log_omega},
          {"Omega", std::exp(rep.log_omega)},
          {"delta", rep.delta},
          {"delta_target", rep.delta_target},
          {"g_grid", rep.g_grid},
          {"g_refined", rep.g_refined},
          {"beta", rep.beta},
          {"xT_norm", rep.xt_norm},
          {"norm_A", rep.norm_a},
          {"kappa_V", rep.kappa_v},
          {"probability_sum", rep.probability_sum},
          {"success_prob", rep.success_prob},
          {"success_prob_exact", rep.success_prob_exact},
          {"sampled_index", {{"i", rep.sampled_index.i}, {"j", rep.sampled_index.j}, {"flat", rep.sampled_flat}}},
          {"success_flag", rep.success_flag},
          {"output_state", to_json(rep.output_state)},
          {"fidelity_error", rep.fidelity_error},
          {"worst_success_fidelity", rep.worst_success_fidelity},
          {"exact_fidelity_bound", rep.exact_fidelity_bound},
          {"injection_checks", inj},
          {"est_amplification_rounds", rep.amplification_rounds},
          {"amplification_round_limit", rep.amplification_limit},
          {"success_hypothesis", rep.success_hypothesis},
          {"bounds_violated", run_violates_bounds(rep)}};
}

nlohmann::json sweep_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"T", r.t_final},
                    {"epsilon", r.epsilon},
                    {"kappa_V", r.kappa},
                    {"k", r.k},
                    {"d", r.d},
                    {"m", r.m},
                    {"log_Omega", r.log_omega},
                    {"k_growth_limit", r.k_growth_limit},
                    {"success_prob", r.success_prob},
                    {"fidelity_error", r.fidelity_error},
                    {"worst_success_fidelity", r.worst_success_fidelity},
                    {"success_flag", r.success_flag},
                    {"passed", r.passed}});
  }
  return {{"schema", kReportSchema}, {"kind", "sweep"}, {"passed", result.passed()}, {"rows", rows}};
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Linear ODE solver via block-encoded truncated Taylor series"};
  app.require_subcommand(1);
  const std::string cmdline = command_line(argc, argv);

  std::uint64_t seed_default = 1;
  try {
    seed_default = default_seed();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  // gen
  auto* gen = app.add_subcommand("gen", "generate a test instance");
  std::string gen_spec = "N=4";
  std::string gen_out, gen_matrix, gen_b, gen_x;
  std::uint64_t gen_seed = seed_default;
  gen->add_option("spec", gen_spec, "generator spec, e.g. \"N=8,kappa=10,profile=boundary\"");
  gen->add_option("--seed", gen_seed, "seed used when the spec has none");
  gen->add_option("--out", gen_out, "instance JSON (default stdout)");
  gen->add_option("--matrix-out", gen_matrix, "also write A as Matrix Market");
  gen->add_option("--b-out", gen_b, "also write b");
  gen->add_option("--x-in-out", gen_x, "also write x_in");

  // encode
  auto* enc = app.add_subcommand("encode", "assemble the encoded linear system");
  InstanceSource enc_src;
  ParamFlags enc_params;
  std::uint64_t enc_seed = seed_default;
  std::string enc_out, enc_rhs, enc_report;
  enc_src.attach(enc);
  enc_params.attach(enc);
  enc->add_option("--seed", enc_seed);
  enc->add_option("--out", enc_out, "Matrix Market file for C")->required();
  enc->add_option("--rhs-out", enc_rhs, "vector file for the right-hand side");
  enc->add_option("--report", enc_report, "summary JSON (default stdout)");

  // solve
  auto* sol = app.add_subcommand("solve", "solve the encoded system");
  InstanceSource sol_src;
  ParamFlags sol_params;
  std::uint64_t sol_seed = seed_default;
  std::string sol_method = "forward", sol_out, sol_report;
  sol_src.attach(sol);
  sol_params.attach(sol);
  sol->add_option("--seed", sol_seed);
  sol->add_option("--method", sol_method, "forward (recurrences) or generic (sparse triangular)")
      ->check(CLI::IsMember({"forward", "generic"}));
  sol->add_option("--out", sol_out, "vector file for the flat solution (or the selected blocks)");
  std::vector<std::string> sol_blocks;
  std::string sol_history;
  sol->add_option("--block", sol_blocks, "write only block i,j to --out; repeatable");
  sol->add_option("--history", sol_history, "vector file with all step states x_{i,0}");
  sol->add_option("--report", sol_report, "summary JSON (default stdout)");

  // verify
  auto* ver = app.add_subcommand("verify", "check the bound suites");
  std::string ver_suite = "all", ver_report;
  SuiteOptions ver_opt;
  ver_opt.seed = seed_default;
  std::vector<std::string> suite_choices = suite_names();
  suite_choices.push_back("all");
  ver->add_option("--suite", ver_suite)->check(CLI::IsMember(suite_choices));
  ver->add_option("--trials", ver_opt.trials)->check(CLI::PositiveNumber);
  ver->add_option("--seed", ver_opt.seed);
  ver->add_option("--report", ver_report, "JSON report (default stdout)");

  // run
  auto* runc = app.add_subcommand("run", "end-to-end emulation with measurement");
  InstanceSource run_src;
  RunConfig run_cfg;
  run_cfg.seed = seed_default;
  std::string run_inject = "off", run_report;
  run_src.attach(runc);
  runc->add_option("--T", run_cfg.t_final, "evolution time")->required();
  runc->add_option("--epsilon", run_cfg.epsilon, "target error in (0, 1/2]")->required();
  runc->add_option("--seed", run_cfg.seed);
  runc->add_option("--inject-delta", run_inject, "off, auto, or a distance");
  runc->add_option("--report", run_report, "JSON report (default stdout)");

  // sweep
  auto* swp = app.add_subcommand("sweep", "grid over T, epsilon and kappa_V");
  std::string swp_gen = "N=4", swp_t = "2", swp_eps = "1e-2,1e-4,1e-6,1e-8", swp_kappa = "1,3,10";
  std::string swp_inject = "auto", swp_json, swp_csv;
  std::uint64_t swp_seed = seed_default;
  swp->add_option("--gen", swp_gen, "base generator spec (kappa is overridden)");
  swp->add_option("--T", swp_t, "comma-separated times");
  swp->add_option("--epsilon", swp_eps, "comma-separated targets");
  swp->add_option("--kappa", swp_kappa, "comma-separated condition numbers");
  swp->add_option("--seed", swp_seed);
  swp->add_option("--inject-delta", swp_inject);
  swp->add_option("--json", swp_json, "JSON report (default stdout)");
  swp->add_option("--csv", swp_csv, "CSV table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const Instance inst = generate(parse_gen_spec(gen_spec, gen_seed));
      nlohmann::json j = instance_to_json(inst);
      j["command"] = cmdline;
      emit(j, gen_out);
      if (!gen_matrix.empty()) write_matrix_market(gen_matrix, inst.a_sparse());
      if (!gen_b.empty()) write_vector(gen_b, inst.b());
      if (!gen_x.empty()) write_vector(gen_x, inst.x_in());
      return kExitOk;
    }

    if (enc->parsed()) {
      const Instance inst = enc_src.load(enc_seed);
      const TaylorParams p = enc_params.resolve(inst);
      const EncodedSystem sys = encode(inst.a_sparse(), inst.x_in(), inst.b(), p, inst.norm_a());
      write_matrix_market(enc_out, sys.matrix);
      if (!enc_rhs.empty()) write_vector(enc_rhs, sys.rhs);
      emit({{"schema", kReportSchema},
            {"kind", "encode"},
            {"command", cmdline},
            {"params", params_json(p)},
            {"N", sys.n},
            {"dimension", sys.matrix.rows()},
            {"nonzeros", sys.matrix.nonZeros()}},
           enc_report);
      return kExitOk;
    }

    if (sol->parsed()) {
      const Instance inst = sol_src.load(sol_seed);
      const TaylorParams p = sol_params.resolve(inst);
      const EncodedSystem sys = encode(inst.a_sparse(), inst.x_in(), inst.b(), p, inst.norm_a());
      const Vector forward = forward_substitute(inst.a_sparse(), p, inst.x_in(), inst.b(), inst.norm_a()).flat();
      const Vector generic = generic_solve(sys);
      const Vector& x = sol_method == "forward" ? forward : generic;
      const double disagreement = (forward - generic).norm() / forward.norm();
      const BlockSolution blocks(p, Eigen::Map<const DenseMatrix>(x.data(), sys.n, p.blocks()));
      if (!sol_out.empty()) {
        if (sol_blocks.empty()) {
          write_vector(sol_out, x);
        } else {
          Vector sel(Eigen::Index(sol_blocks.size()) * sys.n);
          for (std::size_t q = 0; q < sol_blocks.size(); ++q) {
            sel.segment(Eigen::Index(q) * sys.n, sys.n) = blocks.block(flatten(parse_block(sol_blocks[q]), p));
          }
          write_vector(sol_out, sel);
        }
      } else if (!sol_blocks.empty()) {
        throw ParameterError("--block needs --out");
      }
      if (!sol_history.empty()) {
        Vector hist((p.m + 1) * sys.n);
        for (int i = 0; i <= p.m; ++i) hist.segment(Eigen::Index(i) * sys.n, sys.n) = blocks.block(BlockIndex{i, 0});
        write_vector(sol_history, hist);
      }
      nlohmann::json steps = nlohmann::json::array();
      for (int i = 0; i <= p.m; ++i) {
        const Vector exact = reference_solution(inst, i * p.h);
        steps.push_back({{"j", i}, {"t", i * p.h}, {"error", (exact - blocks.block(BlockIndex{i, 0})).norm()}});
      }
      emit({{"schema", kReportSchema},
            {"kind", "solve"},
            {"command", cmdline},
            {"method", sol_method},
            {"params", params_json(p)},
            {"residual", residual(sys, x)},
            {"method_disagreement", disagreement},
            {"steps", steps}},
           sol_report);
      return kExitOk;
    }

    if (ver->parsed()) {
      const auto results = run_suites(ver_suite, ver_opt);
      nlohmann::json arr = nlohmann::json::array();
      bool ok = true;
      for (const auto& r : results) {
        arr.push_back(to_json(r));
        ok = ok && r.passed();
        std::cerr << (r.passed() ? "PASS " : "FAIL ") << r.name << '\n';
        for (const auto& f : r.failures) std::cerr << "  " << f << '\n';
      }
      emit({{"schema", kReportSchema},
            {"kind", "verify"},
            {"command", cmdline},
            {"suite", ver_suite},
            {"trials", ver_opt.trials},
            {"seed", ver_opt.seed},
            {"passed", ok},
            {"suites", arr}},
           ver_report);
      return ok ? kExitOk : kExitBoundViolation;
    }

    if (runc->parsed()) {
      run_cfg.delta_injection = DeltaInjection::parse(run_inject);
      const Instance inst = run_src.load(run_cfg.seed);
      const PipelineReport rep = run(inst, run_cfg);
      nlohmann::json j = report_json(rep);
      j["command"] = cmdline;
      emit(j, run_report);
      return run_violates_bounds(rep) ? kExitBoundViolation : kExitOk;
    }

    if (swp->parsed()) {
      SweepConfig cfg;
      cfg.base = parse_gen_spec(swp_gen, swp_seed);
      cfg.t_values = parse_list(swp_t);
      cfg.epsilons = parse_list(swp_eps);
      cfg.kappas = parse_list(swp_kappa);
      cfg.seed = swp_seed;
      cfg.delta_injection = DeltaInjection::parse(swp_inject);
      const SweepResult result = sweep(cfg);
      nlohmann::json j = sweep_json(result);
      j["command"] = cmdline;
      emit(j, swp_json);
      if (!swp_csv.empty()) {
        std::ofstream out(swp_csv);
        if (!out) throw Error("cannot open '" + swp_csv + "' for writing");
        out << sweep_csv(result);
      }
      return result.passed() ? kExitOk : kExitBoundViolation;
    }
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const AccuracyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace odeql
