#pragma once

// The acceptance suite: ten criteria plus the full-run time budget.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gencert {

inline constexpr int kCriteriaCount = 10;
/// Wall-clock budget of a full acceptance run.
inline constexpr double kFullRunBudgetSeconds = 300;

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// Runs criterion `id` ∈ [1, kCriteriaCount]; throws ContractError otherwise.
CriterionResult run_criterion(int id, const AcceptanceOptions& options = {});

/// "[PASS] 3 name (1.2 s): detail".
std::string format_result(const CriterionResult& r);

struct AcceptanceSummary {
  std::vector<CriterionResult> criteria;
  double seconds = 0;
  bool within_budget = false;
  bool passed = false;
};

/// Every criterion in order, one line each on `log`, then the full-run line.
AcceptanceSummary run_acceptance(const AcceptanceOptions& options, std::ostream& log);

}  // namespace gencert
