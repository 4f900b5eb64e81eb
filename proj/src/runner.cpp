#include "gencert/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace gencert {

namespace {

namespace fs = std::filesystem;

/// Stream id of the single certify-phase draw; trials use ids 0..trials−1.
constexpr std::uint64_t kCertifyStream = 1ull << 62;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string cell(const std::optional<double>& x) { return x ? num(*x) : ""; }

std::string escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + path.string() + "'");
  out << content;
}

struct PhaseContext {
  const ScenarioConfig& config;
  const Instance& instance;
  std::uint64_t seed;
  std::uint64_t budget;
  int jobs;
  RunResult& result;
  std::ostream& log;
};

ResultRow base_row(const PhaseContext& ctx, const char* phase, const std::string& method, long n,
                   std::optional<double> beta) {
  ResultRow r;
  r.scenario = ctx.config.id;
  r.phase = phase;
  r.method = method;
  r.n = double(n);
  r.beta = beta;
  r.delta = ctx.config.delta;
  return r;
}

void attach_baselines(ResultRow& row, std::optional<double> beta, long n, double delta,
                      std::optional<GaussianBaselineInputs> gauss) {
  const BaselineSet b = baselines(beta.value_or(0.0), n, delta, gauss);
  if (beta) {
    row.baseline_gibbs = b.gibbs;
    row.baseline_kl_gibbs = b.kl_gibbs;
  }
  row.baseline_gaussian = b.gaussian;
}

void record_certificate(PhaseContext& ctx, Certificate cert, long n, std::optional<double> beta,
                        double observed, std::optional<double> L_hat,
                        std::optional<GaussianBaselineInputs> gauss) {
  ResultRow row = base_row(ctx, "certify", cert.method, n, beta);
  row.value = cert.value;
  row.L_hat = L_hat;
  row.mean_gap = observed;
  row.mean_slack = cert.value - observed;
  row.status = observed > cert.value ? "exceeded" : "holds";
  attach_baselines(row, beta, n, ctx.config.delta, gauss);
  ctx.result.rows.push_back(row);
  cert.notes = "scenario=" + ctx.config.id + (cert.notes.empty() ? "" : "; " + cert.notes);
  ctx.result.certificate_lines.push_back(to_line(cert));
}

void certify_finite(PhaseContext& ctx, const HamiltonianSpec& spec, long n, double beta) {
  const Instance& inst = ctx.instance;
  const double delta = ctx.config.delta;
  const double b = inst.loss.bound();
  const double c = bounded_difference_coefficient(spec, inst.space, inst.loss, n,
                                                  CoefficientMode::analytic, ctx.budget)
                       .value;
  RandomStream rng(ctx.seed, kCertifyStream);
  const Sample x = draw_sample(inst.space, n, rng);
  RandomStream hrng = rng.split(1);
  const Index h = std::get<Index>(sample_posterior(posterior(spec, x, inst.prior, inst.loss), hrng));
  const double lhat = empirical_loss(Hypothesis{h}, x, inst.loss);
  const double gap = true_loss(Hypothesis{h}, inst.space, inst.loss) - lhat;
  double rho_sup = 0;
  for (Index k = 0; k < inst.loss.num_hypotheses(); ++k)
    if (inst.prior.weights()(k) > 0)
      rho_sup = std::max(rho_sup, subgaussian_parameter(Hypothesis{k}, inst.space, inst.loss,
                                                        SubgaussianMode::hoeffding_proxy)
                                      .rho);
  const double rho_h =
      subgaussian_parameter(Hypothesis{h}, inst.space, inst.loss, SubgaussianMode::hoeffding_proxy).rho;
  const std::string drawn = "h=" + std::to_string(h);
  for (const auto& m : ctx.config.methods) {
    Certificate cert;
    if (m == method::kBoundedDifferences) {
      cert = bound_bounded_differences(b, c, n, delta);
    } else if (m == method::kBernstein) {
      cert = bound_bernstein(loss_variance(Hypothesis{h}, inst.space, inst.loss), b, c, n, delta);
    } else if (m == method::kEmpiricalBernstein) {
      cert = bound_empirical_bernstein(lhat, b, c, n, delta);
    } else if (m == method::kSubgaussianSup || m == method::kSubgaussianLocal) {
      if (!(rho_sup > 0)) continue;
      const auto pair = bound_subgaussian(rho_sup, std::max(rho_h, 1e-300), rho_sup * beta / double(n), n, delta);
      cert = m == method::kSubgaussianSup ? pair.first : pair.second;
      cert.notes = "rho: hoeffding proxy; sigma = rho_sup*beta/n";
    } else {
      continue;
    }
    cert.notes = drawn + (cert.notes.empty() ? "" : "; " + cert.notes);
    record_certificate(ctx, cert, n, beta, gap, lhat, std::nullopt);
  }
}

void certify_gaussian(PhaseContext& ctx, const HamiltonianSpec& spec, long n) {
  const Instance& inst = ctx.instance;
  const double delta = ctx.config.delta;
  const AlgorithmPtr alg = spec.gaussian_algorithm();
  GaussianInputs g;
  g.sigma = spec.gaussian_sigma();
  g.c_A = hypothesis_sensitivity(*alg, inst.space, n, SensitivityMode::declared, ctx.budget).value;
  g.V = algorithm_variance(*alg, inst.space, n, ctx.budget).value;
  const GaussianBaselineInputs gb{g.c_A, g.sigma};

  RandomStream rng(ctx.seed, kCertifyStream);
  const Sample x = draw_sample(inst.space, n, rng);
  const auto post = std::get<GaussianPosterior>(posterior(spec, x, inst.prior, inst.loss));
  RandomStream hrng = rng.split(1);
  const Vector h = std::get<Vector>(sample_posterior(post, hrng));
  const Index npts = inst.space.size();
  const Vector counts = x.counts(npts);
  const Vector row = inst.loss.row(Hypothesis{h}, npts);
  const double L = row.dot(inst.space.probs());
  const double lhat = row.dot(counts) / double(n);
  const double vh = (row.array() - L).square().matrix().dot(inst.space.probs());

  // Posterior averages for the posterior_expectation certificates.
  double mean_kl = 0, mean_gap = 0, mean_v = 0;
  RandomStream prng = rng.split(2);
  for (long s = 0; s < ctx.config.posterior_draws; ++s) {
    const Vector hs = post.mean + post.sigma * prng.normal_vector(h.size());
    const Vector rs = inst.loss.row(Hypothesis{hs}, npts);
    const double Ls = rs.dot(inst.space.probs());
    const double lh = rs.dot(counts) / double(n);
    mean_kl += kl_bernoulli(std::clamp(lh, 0.0, 1.0), std::clamp(Ls, 0.0, 1.0));
    mean_gap += Ls - lh;
    mean_v += (rs.array() - Ls).square().matrix().dot(inst.space.probs());
  }
  const double draws = double(ctx.config.posterior_draws);
  mean_kl /= draws;
  mean_gap /= draws;
  mean_v /= draws;

  for (const auto& m : ctx.config.methods) {
    Certificate cert;
    double observed = L - lhat;
    if (m == method::kGaussianGapJoint) {
      cert = bound_gaussian_randomization(g, n, delta, GaussianVariant::gap_joint);
    } else if (m == method::kGaussianGapBernstein) {
      GaussianInputs gh = g;
      gh.v_h = vh;
      cert = bound_gaussian_randomization(gh, n, delta, GaussianVariant::gap_bernstein);
    } else if (m == method::kGaussianKlExpectation) {
      cert = bound_gaussian_randomization(g, n, delta, GaussianVariant::kl_expectation);
      observed = mean_kl;
    } else if (m == method::kPacBayesGaussianKl) {
      cert = pac_bayes_gaussian_kl(0.0, g, n, delta);
      cert.notes += "; P = Q_X";
      observed = mean_kl;
    } else if (m == method::kModelSelectionGap) {
      cert = pac_bayes_model_selection(0.0, g, n, delta, ModelSelectionVariant::gap);
      cert.notes += "; P = Q_X";
      observed = mean_gap;
    } else if (m == method::kModelSelectionVariance) {
      cert = pac_bayes_model_selection(0.0, g, n, delta, ModelSelectionVariant::variance, mean_v);
      cert.notes += "; P = Q_X, E_P v from " + std::to_string(ctx.config.posterior_draws) + " draws";
      observed = mean_gap;
    } else {
      continue;
    }
    record_certificate(ctx, cert, n, std::nullopt, observed, lhat, gb);
  }
}

void verify_oracles(PhaseContext& ctx, const HamiltonianSpec& spec, long n, double beta) {
  const Instance& inst = ctx.instance;
  const std::uint64_t states = sample_space_size(inst.space.size(), n);
  const std::uint64_t m = std::uint64_t(inst.loss.num_hypotheses());
  if (states > ctx.budget || states > ctx.budget / m)
    throw BudgetExceeded("exact oracles need |X|^n * |H| = " + std::to_string(inst.space.size()) +
                         "^" + std::to_string(n) + " * " + std::to_string(m) +
                         " states, over the enumeration budget " + std::to_string(ctx.budget));
  std::vector<MomentCheckReport> reports;
  const double c = bounded_difference_coefficient(spec, inst.space, inst.loss, n,
                                                  CoefficientMode::brute_force, ctx.budget)
                       .value;
  for (double f : {0.5, 1.0, 2.0}) {
    const double lambda = f * double(n);
    reports.push_back(exact_report("ln EE e^{lambda gap} <= (n/8)(lambda b/n+2c)^2, lambda=" + num(lambda),
                                   exact_mixed_mgf(spec, inst, n, lambda, ctx.budget),
                                   bound_mgf_bounded_differences(inst.loss.bound(), c, n, lambda)));
  }
  PropositionF scaled;
  scaled.lambda = double(n);
  reports.push_back(check_proposition_main(spec, inst, n, scaled, ctx.budget).main);
  PropositionF bern;
  bern.kind = PropositionF::Kind::bernstein;
  bern.delta = ctx.config.delta;
  const auto pb = check_proposition_main(spec, inst, n, bern, ctx.budget);
  reports.push_back(pb.main);
  reports.push_back(*pb.auxiliary);
  reports.push_back(*pb.psi_bound);
  for (auto& r : check_logZ_bounded_differences(spec, inst, n, ctx.budget)) reports.push_back(r);

  for (const auto& r : reports) {
    ResultRow row = base_row(ctx, "verify", "oracle: " + r.label, n, beta);
    row.lhs = r.lhs;
    row.rhs = r.rhs;
    row.margin = r.margin;
    row.status = r.passed ? "pass" : "FAIL";
    if (!r.passed)
      ctx.result.failures.push_back(ctx.config.id + " n=" + std::to_string(n) + ": oracle '" +
                                    r.label + "' margin " + num(r.margin));
    ctx.result.rows.push_back(row);
  }
}

void verify_violations(PhaseContext& ctx, const HamiltonianSpec& spec, long n,
                       std::optional<double> beta) {
  ViolationScenario sc(ctx.instance, spec);
  sc.id = ctx.config.id;
  sc.n = n;
  sc.delta = ctx.config.delta;
  sc.methods = ctx.config.methods;
  sc.trials = ctx.config.trials;
  sc.posterior_trials = ctx.config.posterior_trials;
  sc.posterior_draws = ctx.config.posterior_draws;
  sc.seed = ctx.seed;
  sc.jobs = ctx.jobs;
  sc.budget = ctx.budget;
  const TrialReport rep = violation_rate(sc);
  for (const auto& st : rep.methods) {
    ResultRow row = base_row(ctx, "verify", st.method, n, beta);
    row.value = st.mean_bound;
    row.trials = double(st.trials);
    row.violations = double(st.violations);
    row.violation_rate = st.violation_rate;
    row.cp_upper = st.cp_upper;
    row.mean_gap = st.mean_gap;
    row.mean_slack = st.mean_slack;
    const bool ok = st.cp_upper <= ctx.config.delta;
    row.status = ok ? "pass" : "FAIL";
    if (!ok)
      ctx.result.failures.push_back(ctx.config.id + " n=" + std::to_string(n) + ": " + st.method +
                                    " Clopper-Pearson upper " + num(st.cp_upper) + " > delta");
    ctx.result.rows.push_back(row);
  }
}

void compare_phase(PhaseContext& ctx) {
  const TightnessGrid grid = ctx.config.compare.value_or(TightnessGrid{});
  const TightnessReport rep = tightness_report(grid);
  for (const auto& r : rep.rows) {
    ResultRow row = base_row(ctx, "compare", "gibbs_vs_baseline", r.n, r.beta);
    row.delta = r.delta;
    row.value = r.gibbs_bound;
    row.baseline_gibbs = r.baseline;
    row.rhs = r.ratio;
    row.status = r.improved ? "improved" : "not_improved";
    ctx.result.rows.push_back(row);
  }
  for (const auto& r : rep.kl_rows) {
    ResultRow row = base_row(ctx, "compare", "gibbs_emp_bernstein_vs_kl_chain", r.n, r.beta);
    row.delta = r.delta;
    row.L_hat = r.L_hat;
    row.value = r.emp_bernstein;
    row.baseline_kl_gibbs = r.kl_chain;
    row.status = r.improved ? "improved" : "not_improved";
    ctx.result.rows.push_back(row);
  }
  if (ctx.config.hamiltonian.kind == "gaussian") {
    for (long n : ctx.config.ns) {
      const HamiltonianSpec spec = build_hamiltonian(ctx.config, ctx.instance, n, 0.0);
      const AlgorithmPtr alg = spec.gaussian_algorithm();
      GaussianInputs g;
      g.sigma = spec.gaussian_sigma();
      g.c_A = hypothesis_sensitivity(*alg, ctx.instance.space, n, SensitivityMode::declared, ctx.budget).value;
      g.V = algorithm_variance(*alg, ctx.instance.space, n, ctx.budget).value;
      ResultRow row = base_row(ctx, "compare", "gaussian_gap_joint_vs_baseline", n, std::nullopt);
      row.value = bound_gaussian_randomization(g, n, ctx.config.delta, GaussianVariant::gap_joint).value;
      row.baseline_gaussian =
          *baselines(0.0, n, ctx.config.delta, GaussianBaselineInputs{g.c_A, g.sigma}).gaussian;
      row.status = "informational";
      ctx.result.rows.push_back(row);
    }
  }
  ctx.log << "  compare: " << rep.rows.size() + rep.kl_rows.size() << " grid points, "
          << rep.failures << " where the claimed improvement fails\n";
}

std::string summary_text(const ScenarioConfig& config, std::uint64_t seed, const RunResult& r) {
  std::ostringstream os;
  os << "scenario " << config.id << "\n";
  os << "seed " << seed << " (" << RandomStream::kAlgorithm << ")\n";
  os << "rows " << r.rows.size() << ", certificates " << r.certificate_lines.size() << "\n";
  std::map<std::string, int> per_phase;
  for (const auto& row : r.rows) ++per_phase[row.phase];
  for (const auto& [phase, count] : per_phase) os << "  " << phase << ": " << count << " rows\n";
  for (const auto& row : r.rows)
    if (row.phase == "verify" && row.trials)
      os << "  n=" << *row.n << (row.beta ? " beta=" + num(*row.beta) : "") << " " << row.method
         << ": " << *row.violations << "/" << *row.trials << " violations, CP upper "
         << *row.cp_upper << " [" << row.status << "]\n";
  if (r.failures.empty()) {
    os << "no failures\n";
  } else {
    os << r.failures.size() << " failure(s):\n";
    for (const auto& f : r.failures) os << "  " << f << "\n";
  }
  os << "exit " << r.exit_code << ", wall-clock " << r.wall_seconds << " s\n";
  return os.str();
}

nlohmann::json row_json(const ResultRow& row) {
  nlohmann::json j;
  const auto cols = csv_columns();
  const auto cells = split_csv_line(to_csv(row));
  for (std::size_t i = 0; i < cols.size(); ++i) j[cols[i]] = cells[i];
  return j;
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "schema",     "scenario",       "phase",      "method",         "n",
      "beta",       "delta",          "L_hat",      "value",          "trials",
      "violations", "violation_rate", "cp_upper",   "mean_gap",       "mean_slack",
      "lhs",        "rhs",            "margin",     "baseline_gibbs", "baseline_kl_gibbs",
      "baseline_gaussian", "status"};
  return cols;
}

std::string csv_header() {
  std::string out;
  for (const auto& c : csv_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string to_csv(const ResultRow& r) {
  std::vector<std::string> cells = {kCsvSchema,
                                    escape(r.scenario),
                                    escape(r.phase),
                                    escape(r.method),
                                    cell(r.n),
                                    cell(r.beta),
                                    cell(r.delta),
                                    cell(r.L_hat),
                                    cell(r.value),
                                    cell(r.trials),
                                    cell(r.violations),
                                    cell(r.violation_rate),
                                    cell(r.cp_upper),
                                    cell(r.mean_gap),
                                    cell(r.mean_slack),
                                    cell(r.lhs),
                                    cell(r.rhs),
                                    cell(r.margin),
                                    cell(r.baseline_gibbs),
                                    cell(r.baseline_kl_gibbs),
                                    cell(r.baseline_gaussian),
                                    escape(r.status)};
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ContractError("unterminated quoted CSV field");
  out.push_back(cur);
  return out;
}

RunResult run(const ScenarioConfig& config, const RunOptions& options, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  const std::uint64_t seed = options.seed.value_or(config.master_seed);
  const std::uint64_t budget = options.budget.value_or(config.enumeration_budget);
  const std::vector<std::string> phases = options.phases.empty() ? config.phases : options.phases;
  const auto wants = [&](const char* p) {
    return std::find(phases.begin(), phases.end(), p) != phases.end();
  };

  fs::path out_dir;
  if (options.out_dir) {
    out_dir = *options.out_dir;
  } else if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    out_dir = env;
  } else {
    out_dir = fs::path(config.output.dir).is_absolute() ? fs::path(config.output.dir)
                                                        : fs::path(config.base_dir) / config.output.dir;
  }
  result.out_dir = out_dir.string();
  log << "scenario " << config.id << " (seed " << seed << ", budget " << budget << ", jobs "
      << options.jobs << ")\n";

  try {
    const Instance instance = build_instance(config);
    PhaseContext ctx{config, instance, seed, budget, options.jobs, result, log};
    const bool gibbs = config.hamiltonian.kind == "gibbs";
    const std::vector<double> betas = gibbs ? config.hamiltonian.betas : std::vector<double>{0.0};
    for (long n : config.ns)
      for (double beta : betas) {
        const HamiltonianSpec spec = build_hamiltonian(config, instance, n, beta);
        const std::optional<double> beta_col = gibbs ? std::optional<double>(beta) : std::nullopt;
        log << "  n=" << n << (gibbs ? " beta=" + num(beta) : "") << ": " << spec.describe() << "\n";
        if (wants("certify")) {
          if (gibbs) certify_finite(ctx, spec, n, beta);
          else certify_gaussian(ctx, spec, n);
        }
        if (wants("verify")) {
          if (config.oracles) verify_oracles(ctx, spec, n, beta);
          verify_violations(ctx, spec, n, beta_col);
        }
      }
    if (wants("compare")) compare_phase(ctx);
  } catch (const BudgetExceeded& e) {
    log << "budget refusal: " << e.what() << "\n";
    result.exit_code = exit_code::kBudget;
    result.failures.push_back(std::string("budget refusal: ") + e.what());
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    result.exit_code = exit_code::kConfig;
    result.failures.push_back(e.what());
  } catch (const PreconditionViolated& e) {
    log << "precondition refused: " << e.what() << "\n";
    result.exit_code = exit_code::kConfig;
    result.failures.push_back(std::string("precondition refused: ") + e.what());
  } catch (const ContractError& e) {
    log << "invalid input: " << e.what() << "\n";
    result.exit_code = exit_code::kConfig;
    result.failures.push_back(std::string("invalid input: ") + e.what());
  } catch (const Unsupported& e) {
    log << "unsupported: " << e.what() << "\n";
    result.exit_code = exit_code::kConfig;
    result.failures.push_back(std::string("unsupported: ") + e.what());
  }
  if (result.exit_code == exit_code::kOk && !result.failures.empty())
    result.exit_code = exit_code::kInvariantViolation;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(out_dir);
  std::string csv = csv_header() + "\n";
  for (const auto& row : result.rows) csv += to_csv(row) + "\n";
  const fs::path csv_path = out_dir / config.output.csv;
  write_file(csv_path, csv);
  std::string certs;
  for (const auto& line : result.certificate_lines) certs += line + "\n";
  write_file(out_dir / config.output.certificates, certs);
  write_file(out_dir / config.output.summary, summary_text(config, seed, result));

  nlohmann::json report;
  report["schema"] = kCsvSchema;
  report["scenario"] = config.id;
  report["seed"] = seed;
  report["rng"] = RandomStream::kAlgorithm;
  report["exit_code"] = result.exit_code;
  report["wall_clock_seconds"] = result.wall_seconds;
  report["failures"] = result.failures;
  report["certificates"] = nlohmann::json::array();
  for (const auto& line : result.certificate_lines) report["certificates"].push_back(to_json(parse_line(line)));
  report["rows"] = nlohmann::json::array();
  for (const auto& row : result.rows) report["rows"].push_back(row_json(row));
  write_file(out_dir / config.output.report, report.dump(2) + "\n");
  emit_plot_script(csv_path.string(), (out_dir / config.output.plot).string());

  log << "  wrote " << csv_path.string() << " (" << result.rows.size() << " rows)\n";
  for (const auto& f : result.failures) log << "  FAILURE: " << f << "\n";
  log << "exit " << result.exit_code << "\n";
  return result;
}

void emit_plot_script(const std::string& csv_path, const std::string& out_path) {
  std::ifstream in(csv_path);
  if (!in) throw ContractError("cannot read results CSV '" + csv_path + "'");
  std::string line;
  if (!std::getline(in, line) || line != csv_header())
    throw ContractError("malformed results CSV '" + csv_path + "': unexpected header");
  const auto& cols = csv_columns();
  const auto col = [&](const char* name) {
    return std::size_t(std::find(cols.begin(), cols.end(), name) - cols.begin());
  };
  std::ostringstream data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != cols.size())
      throw ContractError("malformed results CSV: line " + std::to_string(lineno) + " has " +
                          std::to_string(cells.size()) + " fields");
    if (cells[col("phase")] != "compare") continue;
    const auto f = [&](const char* name) {
      const std::string& v = cells[col(name)];
      return v.empty() ? std::string("None") : v;
    };
    std::string method;
    for (char ch : cells[col("method")])
      if (ch != '"' && ch != '\\') method += ch;
    data << "    (\"" << method << "\", " << f("n") << ", " << f("beta") << ", " << f("delta")
         << ", " << f("L_hat") << ", " << f("value") << ", " << f("baseline_gibbs") << ", "
         << f("baseline_kl_gibbs") << ", " << f("baseline_gaussian") << "),\n";
  }

  std::ostringstream py;
  py << R"PY(#!/usr/bin/env python3
"""Bound-vs-baseline curves from a gencert results CSV (compare phase)."""
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

# method, n, beta, delta, L_hat, value, baseline_gibbs, baseline_kl_gibbs, baseline_gaussian
ROWS = [
)PY" << data.str()
     << R"PY(]


def curves(rows, key, x):
    out = defaultdict(list)
    for r in rows:
        out[key(r)].append(r)
    return {k: sorted(v, key=x) for k, v in sorted(out.items(), key=lambda kv: str(kv[0]))}


def main(out_prefix):
    gibbs_rows = [r for r in ROWS if r[0] == "gibbs_vs_baseline"]
    kl_rows = [r for r in ROWS if r[0] == "gibbs_emp_bernstein_vs_kl_chain"]
    gauss = [r for r in ROWS if r[0] == "gaussian_gap_joint_vs_baseline"]

    fig, ax = plt.subplots(1, 3, figsize=(15, 4.5))
    for (beta, delta), rs in curves(gibbs_rows, lambda r: (r[2], r[3]), lambda r: r[1]).items():
        line, = ax[0].plot([r[1] for r in rs], [r[5] for r in rs], "o-",
                           label=f"bounded differences, beta={beta:g}, delta={delta:g}")
        ax[0].plot([r[1] for r in rs], [r[6] for r in rs], "x--", color=line.get_color())
    for r in gauss:
        ax[0].plot([r[1]], [r[5]], "s", color="k")
        ax[0].plot([r[1]], [r[8]], "+", color="k")
    ax[0].set_xscale("log")
    ax[0].set_yscale("log")
    ax[0].set_xlabel("n")
    ax[0].set_ylabel("gap bound (dashed: baseline)")
    ax[0].set_title("bound vs n")

    for (n, delta), rs in curves(gibbs_rows, lambda r: (r[1], r[3]), lambda r: r[2]).items():
        line, = ax[1].plot([r[2] for r in rs], [r[5] for r in rs], "o-", label=f"n={n:g}, delta={delta:g}")
        ax[1].plot([r[2] for r in rs], [r[6] for r in rs], "x--", color=line.get_color())
    ax[1].set_xlabel("beta")
    ax[1].set_ylabel("gap bound (dashed: baseline)")
    ax[1].set_title("bound vs beta")

    for (n, beta, delta), rs in curves(kl_rows, lambda r: (r[1], r[2], r[3]), lambda r: r[4]).items():
        line, = ax[2].plot([r[4] for r in rs], [r[5] for r in rs], "o-",
                           label=f"empirical Bernstein, n={n:g}, beta={beta:g}")
        ax[2].plot([r[4] for r in rs], [r[7] for r in rs], "x--", color=line.get_color())
    ax[2].set_xlabel("empirical loss")
    ax[2].set_ylabel("gap bound (dashed: inverted kl baseline)")
    ax[2].set_title("bound vs empirical loss")

    for a in ax:
        if a.get_legend_handles_labels()[0]:
            a.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out_prefix + ".png", dpi=150)
    print(f"wrote {out_prefix}.png ({len(ROWS)} rows)")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "gencert_plot")
)PY";
  write_file(out_path, py.str());
}

}  // namespace gencert
