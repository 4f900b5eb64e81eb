// gencert: certify / verify / compare scenarios and run the acceptance suite.

#include "gencert/acceptance.hpp"
#include "gencert/runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::uint64_t> budget;
  int jobs = 1;
};

void add_flags(CLI::App* cmd, Flags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config, "Scenario file (JSON)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", f.out, "Output directory (overrides GENCERT_OUT_DIR and the config)");
  cmd->add_option("--budget", f.budget, "Enumeration budget in states");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

int run_phase(const std::string& phase, const Flags& f) {
  gencert::ScenarioConfig config;
  try {
    config = gencert::parse_config(f.config);
  } catch (const gencert::ConfigError& e) {
    for (const auto& err : e.errors()) std::cerr << "config error: " << err << "\n";
    return gencert::exit_code::kConfig;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return gencert::exit_code::kConfig;
  }
  gencert::RunOptions opts;
  opts.phases = {phase};
  opts.seed = f.seed;
  opts.out_dir = f.out;
  opts.budget = f.budget;
  opts.jobs = f.jobs;
  return gencert::run(config, opts, std::cout).exit_code;
}

int run_accept(const Flags& f) {
  gencert::AcceptanceOptions opts;
  if (f.seed) opts.seed = *f.seed;
  opts.jobs = f.jobs;
  const auto summary = gencert::run_acceptance(opts, std::cout);
  if (f.out) {
    std::filesystem::create_directories(*f.out);
    std::ofstream out(std::filesystem::path(*f.out) / "acceptance.txt");
    for (const auto& c : summary.criteria) out << gencert::format_result(c) << "\n";
    out << (summary.passed ? "PASS" : "FAIL") << " full run " << summary.seconds << " s\n";
  }
  return summary.passed ? gencert::exit_code::kOk : gencert::exit_code::kInvariantViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalization certificates for Hamiltonian algorithms"};
  app.require_subcommand(1);
  Flags f;
  auto* certify = app.add_subcommand("certify", "Compute certificates for one seeded draw");
  auto* verify = app.add_subcommand("verify", "Exact oracles and violation rates");
  auto* compare = app.add_subcommand("compare", "Tightness grids against baselines");
  auto* accept = app.add_subcommand("accept", "Full acceptance suite");
  for (auto* cmd : {certify, verify, compare}) add_flags(cmd, f, true);
  add_flags(accept, f, false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gencert::exit_code::kConfig;
  }
  try {
    if (*accept) return run_accept(f);
    if (*certify) return run_phase("certify", f);
    if (*verify) return run_phase("verify", f);
    return run_phase("compare", f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gencert::exit_code::kConfig;
  }
}
