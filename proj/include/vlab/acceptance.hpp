#pragma once

#include <string>
#include <vector>

namespace vlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double budget = 0.0;                 // seconds; part of the verdict
  std::vector<std::string> failures;   // one entry per failed check
  std::vector<std::string> metrics;    // key figures, always reported
};

struct CriterionSpec {
  int id;
  std::string name;
  double budget;
};

// Criteria 1 to 9; each runs in-process.
const std::vector<CriterionSpec>& acceptance_criteria();

// Runs one criterion, timing it. Exceptions become a failed result.
CriterionResult run_criterion(int id);

// Criterion 10: runs `<cli> verify` as a child process and requires exit 0
// within the budget.
CriterionResult run_end_to_end(const std::string& cli_path, double budget = 300.0);

// "[PASS] 3 heat corollary (0.41 s / 30 s) key=value ..."
std::string format_result(const CriterionResult& r);

}  // namespace vlab
