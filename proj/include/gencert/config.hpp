#pragma once

// Scenario configuration files and the loss-table text format.

#include "gencert/verifier.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencert {

/// Every validation problem found in a configuration, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct InstanceConfig {
  /// "table" (loss-table file), "random_table" or "random_embedding".
  std::string kind = "random_table";
  std::string path;
  std::uint64_t seed = 1;
  Index points = 10;
  Index hypotheses = 16;
  Index dim = 2;
};

struct HamiltonianConfig {
  /// "gibbs" or "gaussian".
  std::string kind = "gibbs";
  std::vector<double> betas = {1.0};
  /// gaussian: kernel width; unset means the smallest σ with 12nc_A² ≤ σ².
  std::optional<double> sigma;
  std::string algorithm = "mean_embedding";
  double ridge_lambda = 1.0;
};

struct OutputConfig {
  std::string dir = "gencert_out";
  std::string csv = "results.csv";
  std::string summary = "summary.txt";
  std::string report = "report.json";
  std::string certificates = "certificates.txt";
  std::string plot = "plot_results.py";
};

struct ScenarioConfig {
  std::string id = "scenario";
  InstanceConfig instance;
  HamiltonianConfig hamiltonian;
  std::vector<long> ns = {100};
  double delta = 0.05;
  std::vector<std::string> methods;
  long trials = 1000;
  long posterior_trials = 200;
  long posterior_draws = 10000;
  std::uint64_t master_seed = 1;
  std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
  /// Run the exact enumeration oracles on the instance in the verify phase.
  bool oracles = false;
  /// Subset of {"certify", "verify", "compare"}.
  std::vector<std::string> phases = {"certify", "verify", "compare"};
  std::optional<TightnessGrid> compare;
  OutputConfig output;
  /// Directory of the config file; relative paths resolve against it.
  std::string base_dir = ".";
};

/// Parses and validates a JSON scenario file. Throws ConfigError listing
/// every problem (unknown keys, domain violations, incompatible methods).
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");

/// Loss table file: "points", "mu", optional "b" and "prior" lines, then one
/// "loss <name> v..." line per hypothesis; '#' starts a comment.
struct LossTableFile {
  FiniteDataSpace space;
  FiniteTable table;
  std::vector<std::string> hypotheses;
  std::optional<Vector> prior;
};

LossTableFile read_loss_table(const std::string& path);
LossTableFile parse_loss_table(const std::string& text);
std::string format_loss_table(const LossTableFile& file);

/// Instance described by the config.
Instance build_instance(const ScenarioConfig& config);

/// Hamiltonian for one (n, β) point of the config on the given instance.
HamiltonianSpec build_hamiltonian(const ScenarioConfig& config, const Instance& instance, long n,
                                  double beta);

}  // namespace gencert
