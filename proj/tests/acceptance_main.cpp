// Runs the ten acceptance criteria and prints one line per criterion.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "pfising/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  unsigned seed = 7;
  std::vector<int> only;
  bool json = false;
  app.add_option("--seed", seed, "seed for every random choice");
  app.add_option("--only", only, "criterion ids to run");
  app.add_flag("--json", json, "print a JSON report instead of lines");
  CLI11_PARSE(app, argc, argv);

  const auto results = pfising::run_acceptance(seed, only);
  bool all = !results.empty();
  for (const auto& r : results) {
    all = all && r.pass;
    if (!json) {
      std::printf("%s  [%.1f s]\n", pfising::format_line(r).c_str(), r.seconds);
      std::fflush(stdout);
    }
  }
  if (json) std::cout << pfising::to_json(results, seed) << "\n";
  return all ? 0 : 1;
}
