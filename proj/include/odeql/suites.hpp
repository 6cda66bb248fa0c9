#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "odeql/analysis.hpp"
#include "odeql/generate.hpp"

namespace odeql {

/// One verification suite: bound reports plus any failures with their
/// counterexample description.
struct SuiteResult {
  std::string name;
  std::vector<BoundReport> bounds;
  std::vector<std::string> failures;
  std::size_t not_claimed = 0;
  nlohmann::json detail = nlohmann::json::object();

  bool passed() const;
};

struct SuiteOptions {
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  /// Dense SVD cross-check of ||C^-1|| below this dimension.
  Eigen::Index dense_check_limit = 400;
  /// Instance family ranges.
  std::vector<Eigen::Index> dims{1, 2, 4, 8, 16};
  std::vector<double> kappas{1.0, 3.0, 10.0};
  std::vector<int> steps{1, 2, 4, 8};
  std::vector<double> epsilons{1e-2, 1e-5};
};

/// One member of the bound-suite instance family.
struct FamilyMember {
  std::string id;
  Instance instance;
  TaylorParams params;
};

/// N x kappa_V x b in {zero, random} x m = p x eps, plus sparse-mode draws.
/// h = 1 / (||A|| (1 + 1e-6)) and k follows truncation_order on Omega with
/// T = m h; every member satisfies k >= 5 and (k+1)! >= 2m.
std::vector<FamilyMember> instance_family(const SuiteOptions& opt);

SuiteResult taylor_suite(const SuiteOptions& opt);
SuiteResult inverse_column_suite(const SuiteOptions& opt);
/// ||C^-1||, ||C|| and kappa_C over the family; `which` selects reports from
/// {"lemma2", "lemma3", "thm1"}.
SuiteResult spectral_suite(const SuiteOptions& opt, const std::vector<std::string>& which);
SuiteResult solution_error_suite(const SuiteOptions& opt);
/// Includes the equal-padding bound and the pipeline's post-injection
/// success probability and round count.
SuiteResult success_suite(const SuiteOptions& opt);
SuiteResult state_distance_suite(const SuiteOptions& opt);

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"taylor", "lemma1", "lemma2", "lemma3",
                                              "thm1",   "thm2",   "thm3",   "appendixB"};
  return names;
}

/// Runs a named suite or "all"; throws ParameterError for unknown names.
std::vector<SuiteResult> run_suites(const std::string& name, const SuiteOptions& opt);

nlohmann::json to_json(const BoundReport& r);
nlohmann::json to_json(const SuiteResult& r);

}  // namespace odeql
