#include "gencert/acceptance.hpp"

#include "gencert/verifier.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>

namespace gencert {

namespace {

using Clock = std::chrono::steady_clock;

/// Stream ids of the seeded instances, per criterion family.
constexpr std::uint64_t kGibbsInstanceStream = 1000;
constexpr std::uint64_t kMartingaleSeedOffset = 3000;
constexpr std::uint64_t kViolationInstanceStream = 5000;
constexpr std::uint64_t kEmbeddingInstanceStream = 6000;
constexpr std::uint64_t kIdentityStream = 8000;
constexpr std::uint64_t kScanStream = 9000;
constexpr std::uint64_t kSelfBoundingStream = 10000;

constexpr int kGibbsInstances = 20;
constexpr Index kGibbsSpace = 3;
constexpr Index kGibbsHypotheses = 4;
constexpr Index kGibbsN = 5;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Tracks the worst margin and the failing labels of a batch of exact reports.
struct Tally {
  int checks = 0;
  int failures = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string first_failure;

  void add(const MomentCheckReport& r, const std::string& where) {
    ++checks;
    worst_margin = std::min(worst_margin, r.margin);
    if (!r.passed) {
      if (failures == 0) first_failure = where + ": " + r.label + " margin " + fmt(r.margin);
      ++failures;
    }
  }

  std::string describe() const {
    std::string s = std::to_string(checks) + " checks, " + std::to_string(failures) +
                    " failures, worst margin " + fmt(worst_margin);
    if (failures) s += "; first: " + first_failure;
    return s;
  }
};

struct GibbsCase {
  Instance instance;
  double beta;
  std::string where;
};

/// The 20 seeded Gibbs instances shared by criteria 1, 2 and 4; β cycles through {0, 1, 5, n}.
std::vector<GibbsCase> gibbs_cases(std::uint64_t seed) {
  const double betas[] = {0.0, 1.0, 5.0, double(kGibbsN)};
  std::vector<GibbsCase> out;
  for (int i = 0; i < kGibbsInstances; ++i) {
    RandomStream rng(seed, kGibbsInstanceStream + std::uint64_t(i));
    out.push_back({random_finite_instance(rng, kGibbsSpace, kGibbsHypotheses), betas[i % 4],
                   "instance " + std::to_string(i) + " beta=" + fmt(betas[i % 4])});
  }
  return out;
}

void criterion_exact_mgf(CriterionResult& r, const AcceptanceOptions& o) {
  Tally t;
  for (const auto& gc : gibbs_cases(o.seed)) {
    const HamiltonianSpec spec = HamiltonianSpec::gibbs(gc.beta);
    const double c = bounded_difference_coefficient(spec, gc.instance.space, gc.instance.loss,
                                                    kGibbsN, CoefficientMode::brute_force)
                         .value;
    for (double f : {0.1, 0.5, 1.0, 2.0}) {
      const double lambda = f * double(kGibbsN);
      t.add(exact_report("lambda=" + fmt(lambda), exact_mixed_mgf(spec, gc.instance, kGibbsN, lambda),
                         bound_mgf_bounded_differences(gc.instance.loss.bound(), c, kGibbsN, lambda)),
            gc.where);
    }
  }
  r.passed = t.failures == 0;
  r.detail = t.describe();
}

void criterion_main_proposition(CriterionResult& r, const AcceptanceOptions& o) {
  Tally t;
  for (const auto& gc : gibbs_cases(o.seed)) {
    const HamiltonianSpec spec = HamiltonianSpec::gibbs(gc.beta);
    for (double f : {0.1, 0.5, 1.0, 2.0}) {
      PropositionF F;
      F.lambda = f * double(kGibbsN);
      t.add(check_proposition_main(spec, gc.instance, kGibbsN, F).main, gc.where);
    }
    PropositionF bern;
    bern.kind = PropositionF::Kind::bernstein;
    bern.delta = 0.05;
    const PropositionReport rep = check_proposition_main(spec, gc.instance, kGibbsN, bern);
    t.add(rep.main, gc.where);
    t.add(*rep.auxiliary, gc.where);
  }
  r.passed = t.failures == 0;
  r.detail = t.describe();
}

void criterion_martingale(CriterionResult& r, const AcceptanceOptions& o) {
  Tally t;
  const FiniteDataSpace space = FiniteDataSpace::uniform(2);
  const std::pair<MartingaleCase, const char*> cases[] = {
      {MartingaleCase::i, "(i)"}, {MartingaleCase::ii, "(ii)"}, {MartingaleCase::iii, "(iii)"}};
  for (const auto& [which, name] : cases)
    for (Index n : {2, 3}) {
      const std::uint64_t seed = o.seed + kMartingaleSeedOffset + std::uint64_t(10 * int(which) + n);
      for (const auto& rep : check_martingale_mgf(space, n, which, 100, seed))
        t.add(rep, std::string("case ") + name + " n=" + std::to_string(n));
    }
  r.passed = t.failures == 0;
  r.detail = t.describe();
}

void criterion_log_partition(CriterionResult& r, const AcceptanceOptions& o) {
  Tally t;
  for (const auto& gc : gibbs_cases(o.seed))
    for (const auto& rep :
         check_logZ_bounded_differences(HamiltonianSpec::gibbs(gc.beta), gc.instance, kGibbsN))
      t.add(rep, gc.where);
  r.passed = t.failures == 0;
  r.detail = t.describe();
}

/// Appends one "method: k/trials, CP" fragment per method; false on any CP > δ.
bool violation_summary(const TrialReport& rep, double delta, const std::string& where,
                       std::string& detail) {
  bool ok = true;
  for (const auto& m : rep.methods) {
    ok = ok && m.cp_upper <= delta;
    detail += (detail.empty() ? "" : "; ") + where + " " + m.method + " " +
              std::to_string(m.violations) + "/" + std::to_string(m.trials) + " CP " +
              fmt(m.cp_upper);
  }
  return ok;
}

void criterion_violation_rates(CriterionResult& r, const AcceptanceOptions& o) {
  RandomStream rng(o.seed, kViolationInstanceStream);
  const Instance inst = random_finite_instance(rng, 10, 16);
  bool ok = true;
  for (Index n : {50, 100})
    for (double beta : {5.0, 20.0}) {
      ViolationScenario sc(inst, HamiltonianSpec::gibbs(beta));
      sc.id = "acceptance_5";
      sc.n = n;
      sc.delta = 0.05;
      sc.methods = {method::kBoundedDifferences, method::kBernstein, method::kEmpiricalBernstein};
      sc.trials = 5000;
      sc.seed = o.seed;
      sc.jobs = o.jobs;
      ok = violation_summary(violation_rate(sc), sc.delta,
                             "n=" + std::to_string(n) + " beta=" + fmt(beta), r.detail) &&
           ok;
    }
  r.passed = ok;
}

void criterion_gaussian(CriterionResult& r, const AcceptanceOptions& o) {
  RandomStream rng(o.seed, kEmbeddingInstanceStream);
  const Instance inst = random_embedding_instance(rng, 10, 2);
  const Index n = 100;
  const auto alg = std::make_shared<const StableAlgorithm>(mean_embedding_algorithm(inst.features, n));
  const double c_a = *alg->declared_c_A;
  const double sigma = std::sqrt(12.0 * double(n)) * c_a * (1 + 1e-9);
  GaussianInputs g;
  g.sigma = sigma;
  g.c_A = c_a;
  require_gaussian_stability(g, n, true);
  ViolationScenario sc(inst, HamiltonianSpec::gaussian(sigma, alg));
  sc.id = "acceptance_6";
  sc.n = n;
  sc.delta = 0.05;
  sc.methods = {method::kGaussianGapJoint, method::kGaussianGapBernstein,
                method::kGaussianKlExpectation};
  sc.trials = 5000;
  sc.posterior_trials = 200;
  sc.posterior_draws = 10000;
  sc.seed = o.seed;
  sc.jobs = o.jobs;
  r.detail = "sigma=" + fmt(sigma) + " c_A=" + fmt(c_a);
  r.passed = violation_summary(violation_rate(sc), sc.delta, "n=100", r.detail);
}

void criterion_tightness(CriterionResult& r, const AcceptanceOptions&) {
  const TightnessReport rep = tightness_report(TightnessGrid{});
  // Independent recomputation of the spot values from their closed forms.
  const double n = 1e4, beta = 100, delta = 0.05;
  const double expected = beta / n + std::sqrt(std::log(1 / delta) / (2 * n));
  const double base = 4 * beta / n + (2 + std::log((1 + std::sqrt(std::exp(1.0))) / delta)) / std::sqrt(n);
  const double bound_impl = gibbs_gap_bound(beta, long(n), delta).value;
  const double base_impl = baselines(beta, long(n), delta).gibbs;
  const bool spot = std::abs(bound_impl - 0.02224) <= 1e-3 && std::abs(base_impl - 0.0997) <= 1e-3 &&
                    std::abs(bound_impl - expected) <= 1e-12 && std::abs(base_impl - base) <= 1e-12;
  int grid_fail = 0, kl_fail = 0;
  for (const auto& row : rep.rows) grid_fail += !row.improved;
  for (const auto& row : rep.kl_rows) kl_fail += !row.improved;
  r.passed = spot && grid_fail == 0 && kl_fail == 0 && !rep.rows.empty() && !rep.kl_rows.empty();
  r.detail = "spot n=1e4 beta=100 delta=0.05: bound " + fmt(bound_impl) + " vs baseline " +
             fmt(base_impl) + "; grid " + std::to_string(rep.rows.size() - grid_fail) + "/" +
             std::to_string(rep.rows.size()) + " improved; kl chain " +
             std::to_string(rep.kl_rows.size() - kl_fail) + "/" + std::to_string(rep.kl_rows.size()) +
             " improved";
  for (const auto& row : rep.kl_rows)
    r.detail += "; L_hat=" + fmt(row.L_hat) + ": " + fmt(row.emp_bernstein) + " vs " + fmt(row.kl_chain);
}

void criterion_gaussian_identity(CriterionResult& r, const AcceptanceOptions& o) {
  int checks = 0, stated_fail = 0, corrected_fail = 0;
  double worst_rel = 0;
  std::uint64_t id = 0;
  for (Index d : {1, 2, 5})
    for (double lambda : {1.0, 1.5})
      for (double ratio : {0.0, 0.5, 1.0}) {
        const double sigma = 1.0;
        const Vector w = Vector::Zero(d);
        Vector v = Vector::Zero(d);
        v(0) = ratio * sigma;
        const auto rep = check_gaussian_identity(w, v, sigma, lambda, 1'000'000,
                                                 o.seed + kIdentityStream + id++);
        ++checks;
        if (!rep.stated.passed) {
          ++stated_fail;
          worst_rel = std::max(worst_rel, rep.relative_error_stated);
        }
        corrected_fail += !rep.corrected.passed;
      }
  r.passed = stated_fail == 0;
  r.detail = std::to_string(checks) + " points, " + std::to_string(stated_fail) +
             " fail against exp((2l^2-l)r^2/2s^2) (worst relative error " + fmt(worst_rel) +
             "); " + std::to_string(checks - corrected_fail) + "/" + std::to_string(checks) +
             " agree with exp((l^2-l)r^2/2s^2)";
}

void criterion_kl_utilities(CriterionResult& r, const AcceptanceOptions& o) {
  // Residual grid: 100 values of p̂ in [0, 0.99] × 100 values of B in (0, 5].
  int residual_points = 0, residual_fail = 0, saturated = 0, ulp_limited = 0;
  double worst_residual = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = 1; j <= 100; ++j) {
      const double p = 0.99 * i / 99.0;
      const double B = 5.0 * j / 100.0;
      const double q = kl_inverse_upper(p, B);
      if (q >= 1.0) {
        ++saturated;
        continue;
      }
      ++residual_points;
      const double res = std::abs(kl_bernoulli(p, q) - B);
      worst_residual = std::max(worst_residual, res);
      if (!(res <= kKlInverseTolerance) || q < p) {
        ++residual_fail;
        // The root is bracketed by the neighbouring doubles of q: no double does better.
        const double below = kl_bernoulli(p, std::nextafter(q, 0.0)) - B;
        const double above = kl_bernoulli(p, std::nextafter(q, 1.0)) - B;
        ulp_limited += below <= 0 && above >= 0;
      }
    }

  // Inversion rule: every L ≥ L̂ with kl(L̂‖L) ≤ B satisfies L − L̂ ≤ √(2L̂B) + 2B.
  int rule_counter = 0;
  long rule_checked = 0;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const double p = i / 200.0;
      const double B = 2.0 * j / 200.0;
      const double gap = gap_from_kl(p, B);
      for (int k = 0; k <= 400; ++k) {
        const double L = p + (1.0 - p) * k / 400.0;
        if (kl_bernoulli(p, L) > B) break;
        ++rule_checked;
        rule_counter += L - p > gap + 1e-12;
      }
    }

  // Inversion lemma: L ≤ L̂ + 2√(LA) + A implies L ≤ L̂ + 2√(L̂A) + 5A.
  RandomStream rng(o.seed, kScanStream);
  int lemma_counter = 0;
  long lemma_checked = 0;
  for (int s = 0; s < 2000; ++s) {
    const double L_hat = 2.0 * rng.uniform();
    const double A = std::pow(10.0, -4.0 + 4.0 * rng.uniform());
    const double cap = inversion_lemma(L_hat, A);
    const double hi = 2.0 * cap + 1.0;
    for (int k = 0; k <= 2000; ++k) {
      const double L = hi * k / 2000.0;
      if (L <= L_hat + 2.0 * std::sqrt(L * A) + A) {
        ++lemma_checked;
        lemma_counter += L > cap + 1e-12;
      }
    }
  }
  r.passed = residual_fail == 0 && rule_counter == 0 && lemma_counter == 0;
  r.detail = "kl inverse: " + std::to_string(residual_points) + " roots (" + std::to_string(saturated) +
             " saturated at 1), worst residual " + fmt(worst_residual) + ", " +
             std::to_string(residual_fail) + " over 1e-10 (" + std::to_string(ulp_limited) +
             " of them within one ulp of the root); inversion rule: " +
             std::to_string(rule_checked) + " points, " + std::to_string(rule_counter) +
             " counterexamples; inversion lemma: " + std::to_string(lemma_checked) + " points, " +
             std::to_string(lemma_counter) + " counterexamples";
}

void criterion_self_bounding(CriterionResult& r, const AcceptanceOptions& o) {
  Tally t;
  const std::vector<double> t_grid = {1e-6, 0.01, 0.1, 0.5, 1.0, 1.5, 1.9, 1.99};
  const std::pair<Index, Index> shapes[] = {{2, 4}, {2, 8}, {3, 5}, {4, 4}};
  std::uint64_t id = 0;
  for (const auto& [m, n] : shapes)
    for (Index d : {1, 2}) {
      RandomStream rng(o.seed, kSelfBoundingStream + id++);
      const Instance inst = random_embedding_instance(rng, m, d);
      for (const auto& rep : check_self_bounding(inst.space, inst.features, n, t_grid))
        t.add(rep, "|X|=" + std::to_string(m) + " n=" + std::to_string(n) + " d=" + std::to_string(d));
    }
  const PhiReport phi_rep = check_phi_lemma(default_phi_grid());
  r.passed = t.failures == 0 && phi_rep.passed;
  r.detail = "self-bounding: " + t.describe() + "; phi: " + std::to_string(phi_rep.points) +
             " points, " + std::to_string(phi_rep.monotone_failures) + " monotonicity and " +
             std::to_string(phi_rep.bound_failures) + " bound failures, phi(1)=" + fmt(phi_rep.phi_at_one);
}

struct Criterion {
  const char* name;
  void (*body)(CriterionResult&, const AcceptanceOptions&);
  /// Runtime limit in seconds; 0 when the criterion states none.
  double limit;
};

const Criterion kCriteria[kCriteriaCount] = {
    {"exact mixed MGF vs bounded-differences MGF bound", criterion_exact_mgf, 60},
    {"main proposition oracle (lambda*gap and Bernstein F)", criterion_main_proposition, 0},
    {"martingale MGF oracle suite", criterion_martingale, 60},
    {"bounded differences of ln Z and H_Q", criterion_log_partition, 0},
    {"Gibbs violation rates", criterion_violation_rates, 180},
    {"Gaussian randomization violation rates", criterion_gaussian, 0},
    {"tightness against published baselines", criterion_tightness, 0},
    {"Gaussian moment identity", criterion_gaussian_identity, 0},
    {"kl utilities", criterion_kl_utilities, 0},
    {"self-bounding and phi checks", criterion_self_bounding, 30},
};

}  // namespace

CriterionResult run_criterion(int id, const AcceptanceOptions& options) {
  require(id >= 1 && id <= kCriteriaCount, "criterion id must lie in 1.." + std::to_string(kCriteriaCount));
  const Criterion& c = kCriteria[id - 1];
  CriterionResult r;
  r.id = id;
  r.name = c.name;
  const auto start = Clock::now();
  try {
    c.body(r, options);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (c.limit > 0 && r.seconds >= c.limit) {
    r.passed = false;
    r.detail += "; over the " + fmt(c.limit) + " s limit";
  }
  return r;
}

std::string format_result(const CriterionResult& r) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1f", r.seconds);
  return std::string(r.passed ? "[PASS] " : "[FAIL] ") + std::to_string(r.id) + " " + r.name +
         " (" + secs + " s): " + r.detail;
}

AcceptanceSummary run_acceptance(const AcceptanceOptions& options, std::ostream& log) {
  AcceptanceSummary s;
  const auto start = Clock::now();
  bool all = true;
  for (int id = 1; id <= kCriteriaCount; ++id) {
    s.criteria.push_back(run_criterion(id, options));
    all = all && s.criteria.back().passed;
    log << format_result(s.criteria.back()) << std::endl;
  }
  s.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  s.within_budget = s.seconds < kFullRunBudgetSeconds;
  s.passed = all && s.within_budget;
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.1f", s.seconds);
  int failed = 0;
  for (const auto& c : s.criteria) failed += !c.passed;
  log << (s.passed ? "[PASS] " : "[FAIL] ") << "full accept under " << kFullRunBudgetSeconds
      << " s with exit 0 (" << secs << " s, " << failed << " failing criteria)" << std::endl;
  return s;
}

}  // namespace gencert
