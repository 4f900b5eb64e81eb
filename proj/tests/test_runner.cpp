#include "gencert/runner.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gencert;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gencert_test_" + name);
  fs::remove_all(p);
  return p;
}

ScenarioConfig small_gibbs() {
  return parse_config_text(R"JSON({
    "id": "small",
    "instance": {"kind": "random_table", "seed": 3, "points": 3, "hypotheses": 4},
    "hamiltonian": {"kind": "gibbs", "beta": [0, 2]},
    "n": [4],
    "trials": 200,
    "oracles": true,
    "compare": {"ns": [100], "betas": ["sqrt(n)"], "deltas": [0.05]}
  })JSON");
}

RunOptions to(const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir.string();
  return o;
}

}  // namespace

TEST(Csv, HeaderIsVersionedAndRowsHaveAllColumns) {
  EXPECT_EQ(csv_header().rfind("schema,scenario,phase,method", 0), 0u);
  ResultRow r;
  r.scenario = "a,b";
  r.method = "say \"hi\"";
  r.value = 0.1;
  const auto cells = split_csv_line(to_csv(r));
  ASSERT_EQ(cells.size(), csv_columns().size());
  EXPECT_EQ(cells[0], kCsvSchema);
  EXPECT_EQ(cells[1], "a,b");
  EXPECT_EQ(cells[3], "say \"hi\"");
  EXPECT_EQ(std::stod(cells[8]), 0.1);
  EXPECT_EQ(cells[4], "");
  EXPECT_THROW(split_csv_line("\"open"), ContractError);
}

TEST(Run, AllPhasesPassAndOutputsAreWritten) {
  const fs::path dir = scratch("all");
  std::ostringstream log;
  const auto r = run(small_gibbs(), to(dir), log);
  EXPECT_EQ(r.exit_code, exit_code::kOk) << log.str();
  for (const char* f : {"results.csv", "summary.txt", "report.json", "certificates.txt", "plot_results.py"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  int phases[3] = {0, 0, 0};
  for (const auto& row : r.rows) {
    phases[0] += row.phase == "certify";
    phases[1] += row.phase == "verify";
    phases[2] += row.phase == "compare";
  }
  EXPECT_GT(phases[0], 0);
  EXPECT_GT(phases[1], 0);
  EXPECT_GT(phases[2], 0);
  EXPECT_NE(slurp(dir / "summary.txt").find("philox4x32-10"), std::string::npos);
}

TEST(Run, SameSeedGivesByteIdenticalCsv) {
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  std::ostringstream log;
  run(small_gibbs(), to(a), log);
  RunOptions ob = to(b);
  ob.jobs = 3;
  run(small_gibbs(), ob, log);
  RunOptions oc = to(c);
  oc.seed = 999;
  run(small_gibbs(), oc, log);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  EXPECT_EQ(slurp(a / "certificates.txt"), slurp(b / "certificates.txt"));
  EXPECT_NE(slurp(a / "results.csv"), slurp(c / "results.csv"));
}

TEST(Run, CertificateLinesRecomputeFromTheirInputs) {
  const fs::path dir = scratch("recompute");
  std::ostringstream log;
  const auto r = run(small_gibbs(), to(dir), log);
  ASSERT_FALSE(r.certificate_lines.empty());
  std::istringstream in(slurp(dir / "certificates.txt"));
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const Certificate c = parse_line(line);
    EXPECT_EQ(recompute(c).value, c.value) << line;
    ++count;
  }
  EXPECT_EQ(count, int(r.certificate_lines.size()));
}

TEST(Run, OverBudgetEnumerationExitsFour) {
  auto config = small_gibbs();
  config.ns = {30};
  const fs::path dir = scratch("budget");
  std::ostringstream log;
  const auto r = run(config, to(dir), log);
  EXPECT_EQ(r.exit_code, exit_code::kBudget);
  EXPECT_NE(log.str().find("budget"), std::string::npos);
}

TEST(Run, PreconditionFailureExitsThree) {
  auto config = parse_config_text(R"JSON({
    "instance": {"kind": "random_embedding", "points": 4},
    "hamiltonian": {"kind": "gaussian", "sigma": 1e-4},
    "phases": ["certify"]
  })JSON");
  std::ostringstream log;
  EXPECT_EQ(run(config, to(scratch("precondition")), log).exit_code, exit_code::kConfig);
}

TEST(Run, OutputDirectoryEnvironmentOverride) {
  auto config = small_gibbs();
  config.phases = {"compare"};
  const fs::path env_dir = scratch("env");
  ::setenv(kOutDirEnv, env_dir.string().c_str(), 1);
  std::ostringstream log;
  const auto r = run(config, RunOptions{}, log);
  ::unsetenv(kOutDirEnv);
  EXPECT_EQ(r.out_dir, env_dir.string());
  EXPECT_TRUE(fs::exists(env_dir / "results.csv"));
  const fs::path flag_dir = scratch("flag");
  ::setenv(kOutDirEnv, env_dir.string().c_str(), 1);
  const auto r2 = run(config, to(flag_dir), log);
  ::unsetenv(kOutDirEnv);
  EXPECT_EQ(r2.out_dir, flag_dir.string());
}

TEST(PlotScript, EmptyResultsAndDeterminism) {
  const fs::path dir = scratch("plot");
  fs::create_directories(dir);
  std::ofstream(dir / "empty.csv") << csv_header() << "\n";
  emit_plot_script((dir / "empty.csv").string(), (dir / "a.py").string());
  emit_plot_script((dir / "empty.csv").string(), (dir / "b.py").string());
  const std::string script = slurp(dir / "a.py");
  EXPECT_NE(script.find("ROWS = [\n]"), std::string::npos);
  EXPECT_EQ(script, slurp(dir / "b.py"));
  std::ofstream(dir / "bad.csv") << "not,a,header\n";
  EXPECT_THROW(emit_plot_script((dir / "bad.csv").string(), (dir / "c.py").string()), ContractError);
  EXPECT_THROW(emit_plot_script((dir / "missing.csv").string(), (dir / "d.py").string()), ContractError);
}

TEST(PlotScript, OneDataRowPerCompareRow) {
  auto config = small_gibbs();
  config.phases = {"compare"};
  config.compare->ns = {100, 1000};
  config.compare->deltas = {0.05, 0.01};
  const fs::path dir = scratch("plotrows");
  std::ostringstream log;
  const auto r = run(config, to(dir), log);
  const std::string script = slurp(dir / "plot_results.py");
  std::size_t count = 0, pos = 0;
  while ((pos = script.find("\n    (\"", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  EXPECT_EQ(count, r.rows.size());
  EXPECT_EQ(r.rows.size(), 4u + 3u);
}
