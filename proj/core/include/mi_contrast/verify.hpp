#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mic {

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
};

// Runs the full acceptance suite (twelve criteria; the staircase
// benchmarks make this take tens of minutes) and returns one result per
// criterion, in order. `on_result` fires as each criterion finishes, for
// progress reporting.
std::vector<CriterionResult> run_acceptance(
    uint64_t master_seed = 1,
    const std::function<void(const CriterionResult&)>& on_result = {});

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace mic
