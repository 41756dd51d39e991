#pragma once

#include <string>
#include <vector>

namespace pfising {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

// Runs the acceptance criteria in `ids` (all ten when empty); random choices derive from seed.
std::vector<CriterionResult> run_acceptance(unsigned seed, const std::vector<int>& ids = {});

// One line per criterion.
std::string format_line(const CriterionResult& r);
// {"seed": ..., "criteria": [{id, name, pass, seconds, detail}, ...]}
std::string to_json(const std::vector<CriterionResult>& results, unsigned seed);

}  // namespace pfising
