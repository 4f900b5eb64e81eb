#pragma once

// Batch execution of scenario configs: certify / verify / compare phases,
// CSV and summary persistence, and the plot-script emitter.

#include "gencert/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gencert {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInvariantViolation = 2;
inline constexpr int kConfig = 3;
inline constexpr int kBudget = 4;
}  // namespace exit_code

inline constexpr const char* kCsvSchema = "gencert.v1";
/// Environment variable overriding the output directory (below --out).
inline constexpr const char* kOutDirEnv = "GENCERT_OUT_DIR";

const std::vector<std::string>& csv_columns();

/// One CSV row; absent numeric fields are written as empty cells.
struct ResultRow {
  std::string scenario;
  std::string phase;
  std::string method;
  std::optional<double> n, beta, delta, L_hat, value;
  std::optional<double> trials, violations, violation_rate, cp_upper, mean_gap, mean_slack;
  std::optional<double> lhs, rhs, margin;
  std::optional<double> baseline_gibbs, baseline_kl_gibbs, baseline_gaussian;
  std::string status;
};

std::string csv_header();
std::string to_csv(const ResultRow& row);
/// RFC 4180 field splitting (quoted fields may contain commas and doubled quotes).
std::vector<std::string> split_csv_line(const std::string& line);

struct RunOptions {
  /// Phases to run; empty means the config's phases.
  std::vector<std::string> phases;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> budget;
  int jobs = 1;
};

struct RunResult {
  int exit_code = exit_code::kOk;
  std::vector<ResultRow> rows;
  std::vector<std::string> certificate_lines;
  std::vector<std::string> failures;
  std::string out_dir;
  double wall_seconds = 0;
};

/// Executes the requested phases and writes CSV, certificates, summary, JSON
/// report and plot script into the output directory. Exit code 2 on any
/// exact-margin or violation-rate failure, 4 when an enumeration exceeds the
/// budget, 3 when the config cannot be realized.
RunResult run(const ScenarioConfig& config, const RunOptions& options, std::ostream& log);

/// Writes a self-contained matplotlib script plotting compare-phase rows of a
/// results CSV: bound vs n and bound vs β, baselines overlaid.
void emit_plot_script(const std::string& csv_path, const std::string& out_path);

}  // namespace gencert
