// Acceptance runner: `--criterion N` runs one criterion, `--full` the whole
// suite under its time budget. Exit 0 iff the selected checks pass.

#include "gencert/acceptance.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"gencert acceptance criteria"};
  int criterion = 0;
  bool full = false;
  gencert::AcceptanceOptions opts;
  app.add_option("--criterion", criterion, "Criterion id")->check(CLI::Range(1, gencert::kCriteriaCount));
  app.add_flag("--full", full, "All criteria plus the full-run budget");
  app.add_option("--seed", opts.seed, "Seed");
  app.add_option("--jobs", opts.jobs, "Worker threads");
  CLI11_PARSE(app, argc, argv);
  if (full || criterion == 0) return gencert::run_acceptance(opts, std::cout).passed ? 0 : 1;
  const auto r = gencert::run_criterion(criterion, opts);
  std::cout << gencert::format_result(r) << std::endl;
  return r.passed ? 0 : 1;
}
