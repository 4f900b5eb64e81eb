#pragma once

// Exact enumeration oracles for the moment inequalities, Monte Carlo
// violation-rate testing of certificates, and tightness comparisons.

#include "gencert/algorithms.hpp"
#include "gencert/certificates.hpp"
#include "gencert/hamiltonian.hpp"
#include "gencert/model.hpp"
#include "gencert/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gencert {

enum class Regime { exact_enumeration, monte_carlo };

std::string to_string(Regime r);

/// Exact-regime margins below −kExactMarginTolerance are failures.
inline constexpr double kExactMarginTolerance = 1e-9;

struct MomentCheckReport {
  std::string label;
  double lhs = 0;
  double rhs = 0;
  /// rhs − lhs; kept even when negative.
  double margin = 0;
  Regime regime = Regime::exact_enumeration;
  double std_error = 0;
  bool low_confidence = false;
  bool passed = true;
};

/// Exact report: passed iff margin ≥ −kExactMarginTolerance.
MomentCheckReport exact_report(std::string label, double lhs, double rhs);

/// A finite data space, a loss model and a prior. Parametric instances carry
/// the feature matrix their loss and algorithm are built from, and a Lebesgue prior.
struct Instance {
  FiniteDataSpace space;
  LossModel loss;
  PriorWeights prior;
  Matrix features;
};

/// |𝒳| points with random μ (normalized uniforms), a |ℋ|×|𝒳| loss table
/// uniform on [0,1] with b = 1, and a uniform prior.
Instance random_finite_instance(RandomStream& rng, Index space_size, Index num_hypotheses);

/// 1 − exp(−‖h − φ_x‖²/2) on columns φ_x of `features`; b = 1.
ParametricLoss gaussian_bump_loss(const Matrix& features);

/// Random μ and features uniform on [−1,1]^d, with the gaussian_bump loss.
Instance random_embedding_instance(RandomStream& rng, Index space_size, Index dim);

/// Diameter of the feature columns.
double feature_diameter(const Matrix& features);

/// ln 𝔼_X 𝔼_{h∼Q_X} e^{λΔ(h,X)} by exhaustive enumeration.
double exact_mixed_mgf(const HamiltonianSpec& spec, const Instance& inst, Index n, double lambda,
                       std::uint64_t budget = kDefaultEnumerationBudget);

struct PropositionF {
  enum class Kind { scaled_gap, bernstein } kind = Kind::scaled_gap;
  /// λ for scaled_gap.
  double lambda = 1;
  /// δ entering λ(h) for bernstein.
  double delta = 0.05;
};

/// Bernstein λ(h) = √K/((b/n)√K + √(v/n)), K = nc² + ln(1/δ), capped at 0.999·n/b.
double bernstein_lambda(double v, double b, double c, Index n, double delta);

struct PropositionReport {
  /// mixed MGF ≤ sup_h ψ_F(h).
  MomentCheckReport main;
  /// bernstein only: max_h ln 𝔼 e^{2F_λ(h,X)} ≤ 0.
  std::optional<MomentCheckReport> auxiliary;
  /// bernstein only: sup_h ψ_F(h) ≤ n·c².
  std::optional<MomentCheckReport> psi_bound;
  double c = 0;
};

/// c is the brute-force bounded-difference coefficient of the spec.
PropositionReport check_proposition_main(const HamiltonianSpec& spec, const Instance& inst,
                                         Index n, const PropositionF& F,
                                         std::uint64_t budget = kDefaultEnumerationBudget);

enum class MartingaleCase { i, ii, iii };

/// `count` random tables f : 𝒳ⁿ → ℝ with the case hypothesis enforced by
/// rescaling, each compared exactly against e^{nr²}, e^{nc²/8} or exp(Σv_k/(2−b)).
///
/// Recipe per table: entries iid N(0,1) from RandomStream(seed, index); case
/// (i) multiplies by s ∈ U(0.1, 2) and measures r²; case (ii) rescales to a
/// bounded-difference constant c ∈ U(0.1, 3); case (iii) rescales so that
/// max(f − 𝔼_k f) = b ∈ U(0.1, 1.9). Every fifth table is additive,
/// f(x) = Σ g(xᵢ), before rescaling.
std::vector<MomentCheckReport> check_martingale_mgf(const FiniteDataSpace& space, Index n,
                                                    MartingaleCase which, int count,
                                                    std::uint64_t seed);

/// max |D ln Z| ≤ c and max |D H_Q| ≤ 2c with c brute force.
std::vector<MomentCheckReport> check_logZ_bounded_differences(
    const HamiltonianSpec& spec, const Instance& inst, Index n,
    std::uint64_t budget = kDefaultEnumerationBudget);

struct GaussianIdentityReport {
  /// MC estimate against the stated closed form exp((2λ²−λ)‖v−w‖²/2σ²).
  MomentCheckReport stated;
  /// The same estimate against exp((λ²−λ)‖v−w‖²/2σ²).
  MomentCheckReport corrected;
  double relative_error_stated = 0;
  double relative_error_corrected = 0;
};

/// 𝔼_{x∼N(w,σ²I)} exp(−λ(‖x−v‖² − ‖x−w‖²)/2σ²) by Monte Carlo. Passes when the
/// relative error is ≤ 1% or within 4 standard errors. Outside λ ∈ [1,2],
/// ‖v−w‖/σ ≤ 2 the estimate is labelled low-confidence.
GaussianIdentityReport check_gaussian_identity(const Vector& w, const Vector& v, double sigma,
                                               double lambda, long mc_samples,
                                               std::uint64_t seed);

/// f(x) = ‖A(x) − 𝔼A‖² for the mean embedding of `features`, a = 4nc_A², and
/// 𝔼e^{λ(f−𝔼f)} ≤ exp(λ²a𝔼f/(2−aλ)) on λ = t/a for every t in `t_grid` ⊂ (0,2).
/// Also checks the hypothesis D²f ≤ a·f on every sample.
std::vector<MomentCheckReport> check_self_bounding(const FiniteDataSpace& space,
                                                   const Matrix& features, Index n,
                                                   const std::vector<double>& t_grid,
                                                   std::uint64_t budget = kDefaultEnumerationBudget);

/// (eᵗ − t − 1)/t², continuous at 0.
double phi(double t);

struct PhiReport {
  int points = 0;
  int monotone_failures = 0;
  int bound_failures = 0;
  double phi_at_one = 0;
  bool passed = true;
};

PhiReport check_phi_lemma(const std::vector<double>& grid);

/// Evenly spaced grid of `points` values in (−10, 2).
std::vector<double> default_phi_grid(int points = 10000);

/// One-sided Clopper–Pearson upper confidence bound for k successes in n trials.
double clopper_pearson_upper(long k, long n, double level = 0.999);

struct MethodStats {
  std::string method;
  Scope scope = Scope::joint_draw;
  long trials = 0;
  long violations = 0;
  double violation_rate = 0;
  double cp_upper = 0;
  double mean_gap = 0;
  double mean_bound = 0;
  double mean_slack = 0;
};

struct TrialReport {
  std::uint64_t seed = 0;
  std::string rng = RandomStream::kAlgorithm;
  long trials = 0;
  std::vector<MethodStats> methods;
};

struct ViolationScenario {
  ViolationScenario(Instance inst, HamiltonianSpec h) : instance(std::move(inst)), spec(std::move(h)) {}

  std::string id = "scenario";
  Instance instance;
  HamiltonianSpec spec;
  Index n = 100;
  double delta = 0.05;
  std::vector<std::string> methods;
  long trials = 1000;
  /// Trials and per-trial posterior draws for posterior_expectation methods.
  long posterior_trials = 200;
  long posterior_draws = 10000;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::uint64_t budget = kDefaultEnumerationBudget;
};

/// Methods that violation_rate can test for the scenario's Hamiltonian.
std::vector<std::string> testable_methods(const HamiltonianSpec& spec);

/// Throws ContractError naming the first incompatible method.
void check_method_compatibility(const HamiltonianSpec& spec, const Instance& inst,
                                const std::vector<std::string>& methods);

/// Per trial t: X from RandomStream(seed, t), h ∼ Q_X from its split; a
/// violation is Δ > bound (strict). Serial and parallel runs are bit-identical.
TrialReport violation_rate(const ViolationScenario& scenario);

struct TightnessRow {
  long n = 0;
  double beta = 0;
  double delta = 0;
  double gibbs_bound = 0;
  double baseline = 0;
  double ratio = 0;
  bool improved = false;
};

struct KlChainRow {
  long n = 0;
  double beta = 0;
  double delta = 0;
  double L_hat = 0;
  double emp_bernstein = 0;
  double kl_chain = 0;
  bool improved = false;
};

struct KlChainPoint {
  long n = 1000;
  double beta = 30;
  double delta = 0.05;
  std::vector<double> L_hat = {0.0, 0.1, 0.3};
};

struct TightnessGrid {
  std::vector<long> ns = {100, 1000, 10000};
  /// "0", "sqrt(n)", "n/10" or a number.
  std::vector<std::string> betas = {"0", "sqrt(n)", "n/10"};
  std::vector<double> deltas = {0.5, 0.05, 0.01};
  std::vector<KlChainPoint> kl_points = {KlChainPoint{}};
};

struct TightnessReport {
  std::vector<TightnessRow> rows;
  std::vector<KlChainRow> kl_rows;
  int failures = 0;
};

double resolve_beta(const std::string& rule, long n);

TightnessReport tightness_report(const TightnessGrid& grid);

}  // namespace gencert
