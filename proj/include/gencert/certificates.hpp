#pragma once

// Closed-form generalization certificates, comparison baselines and the
// binary-kl utilities used to state and invert them.

#include "gencert/core.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gencert {

/// kl(s‖t) between Bernoulli(s) and Bernoulli(t) with 0·ln0 = 0; +∞ when t ∈ {0,1} and s ≠ t.
template <typename S>
S kl_bernoulli(S s, S t) {
  require(s >= 0 && s <= 1 && t >= 0 && t <= 1, "kl_bernoulli: arguments must lie in [0,1]");
  if (s == t) return S(0);
  if (t == 0 || t == 1) return std::numeric_limits<S>::infinity();
  S out = 0;
  if (s > 0) out += s * std::log(s / t);
  if (s < 1) out += (1 - s) * std::log((1 - s) / (1 - t));
  return out < 0 ? S(0) : out;
}

inline constexpr int kKlInverseIterations = 200;
inline constexpr double kKlInverseTolerance = 1e-10;
inline constexpr double kKlInverseCeiling = 1.0 - 1e-15;

/// Largest q ∈ [p̂, 1) with kl(p̂‖q) = B, by bisection on [p̂, 1−1e-15]; 1 if no root below 1.
double kl_inverse_upper(double p_hat, double B);

/// √(2·L̂·B) + 2B: gap implied by kl(L̂‖L) ≤ B.
double gap_from_kl(double L_hat, double B);

/// L̂ + 2√(L̂A) + 5A: every L with L ≤ L̂ + 2√(LA) + A lies below this.
double inversion_lemma(double L_hat, double A);

enum class Scope { joint_draw, posterior_expectation };

std::string to_string(Scope scope);
Scope scope_from_string(const std::string& s);

namespace method {
inline constexpr const char* kBoundedDifferences = "bounded_differences";
inline constexpr const char* kBernstein = "bernstein";
inline constexpr const char* kEmpiricalBernstein = "empirical_bernstein";
inline constexpr const char* kSubgaussianSup = "subgaussian_sup";
inline constexpr const char* kSubgaussianLocal = "subgaussian_local";
inline constexpr const char* kGaussianMgf = "gaussian_mgf";
inline constexpr const char* kGaussianKlExpectation = "gaussian_kl_expectation";
inline constexpr const char* kGaussianGapJoint = "gaussian_gap_joint";
inline constexpr const char* kGaussianGapBernstein = "gaussian_gap_bernstein";
inline constexpr const char* kPacBayesTransfer = "pac_bayes_transfer";
inline constexpr const char* kPacBayesGaussianKl = "pac_bayes_gaussian_kl";
inline constexpr const char* kModelSelectionGap = "model_selection_gap";
inline constexpr const char* kModelSelectionVariance = "model_selection_variance";
}  // namespace method

/// All certificate method tags, in a fixed order.
const std::vector<std::string>& certificate_methods();

struct Certificate {
  std::string method;
  double value = 0;
  double delta = 0;
  Scope scope = Scope::joint_draw;
  /// Every numeric argument of the bound, in argument order.
  std::vector<std::pair<std::string, double>> inputs;
  std::string notes;

  /// Named input; throws ContractError when absent.
  double input(const std::string& key) const;
  bool has_input(const std::string& key) const;
};

/// Re-evaluates a certificate from its method and inputs alone.
Certificate recompute(const Certificate& cert);

/// "method value delta scope key=value ..." with %.17g numbers, then " # notes" when present.
std::string to_line(const Certificate& cert);
Certificate parse_line(const std::string& line);

nlohmann::json to_json(const Certificate& cert);
Certificate certificate_from_json(const nlohmann::json& j);

/// b(c + √(ln(1/δ)/2n)).
Certificate bound_bounded_differences(double b, double c, long n, double delta);

/// (n/8)(λb/n + 2c)²: bound on ln 𝔼𝔼 e^{λΔ}.
double bound_mgf_bounded_differences(double b, double c, long n, double lambda);

/// 2√(v(c² + ln(1/δ)/n)) + b(c² + ln(1/δ)/n).
Certificate bound_bernstein(double v, double b, double c, long n, double delta);

/// 2√(L̂·b(c² + ln(1/δ)/n)) + 5b(c² + ln(1/δ)/n).
Certificate bound_empirical_bernstein(double L_hat, double b, double c, long n, double delta);

/// Part (i) ρ_sup(2σ + √(2ln(1/δ)/n)) and part (ii) ρ_h(√32σ + √(4ln(1/δ)/n)).
std::pair<Certificate, Certificate> bound_subgaussian(double rho_sup, double rho_h, double sigma,
                                                      long n, double delta);

enum class GaussianVariant { mgf, kl_expectation, gap_joint, gap_bernstein };

struct GaussianInputs {
  double V = 0;      // 𝒱(A)
  double sigma = 1;  // kernel width
  double c_A = 0;    // hypothesis sensitivity, for the stability precondition
  /// v(h), required by gap_bernstein.
  std::optional<double> v_h;
};

/// Throws PreconditionViolated unless 12·n·c_A² ≤ σ² (and n > 8 when `need_n_gt_8`).
void require_gaussian_stability(const GaussianInputs& g, long n, bool need_n_gt_8);

Certificate bound_gaussian_randomization(const GaussianInputs& g, long n, double delta,
                                         GaussianVariant variant);

/// KL(P,Q) + log_moment + ln(1/δ).
Certificate pac_bayes_transfer(double kl_PQ, double log_moment, double delta);

/// (2KL + 6V/σ² + ln(2√n) + 2ln(1/δ))/n, a bound on 𝔼_P kl(L̂‖L).
Certificate pac_bayes_gaussian_kl(double kl_PQ, const GaussianInputs& g, long n, double delta);

inline constexpr double kModelSelectionKlFloor = 0.5;

enum class ModelSelectionVariant { gap, variance };

/// gap: √((3V/σ² + 2KL + ln(2·max(KL, ½)/δ))/n).
/// variance: 2√((2E_P v + 1/n)(3V/σ² + C)/n) + (3V/σ² + C)/n with
/// C = 2KL + 1 + ln(2(KL+1)·2(n·E_P v + 1)/δ).
Certificate pac_bayes_model_selection(double kl_PQ, const GaussianInputs& g, long n, double delta,
                                      ModelSelectionVariant variant,
                                      std::optional<double> expected_variance = std::nullopt);

struct BaselineSet {
  double gibbs = 0;
  double kl_gibbs = 0;
  std::optional<double> gaussian;
};

struct GaussianBaselineInputs {
  double c_A = 0;
  double sigma = 1;
};

BaselineSet baselines(double beta, long n, double delta,
                      std::optional<GaussianBaselineInputs> gauss = std::nullopt);

/// Gibbs specializations (b = 1, c = β/n).
Certificate gibbs_gap_bound(double beta, long n, double delta);
Certificate gibbs_empirical_bernstein(double L_hat, double beta, long n, double delta);
/// The comparison chain: gap_from_kl applied to the kl baseline.
double gibbs_kl_baseline_gap(double L_hat, double beta, long n, double delta);

enum class LambdaObjective {
  /// λb²/(8n) + bc/2 + (nc²/2 + ln(1/δ))/λ
  bounded_differences,
  /// λ/(4n) + K/λ
  gaussian_gap,
};

struct LambdaProblem {
  LambdaObjective objective = LambdaObjective::bounded_differences;
  double b = 1;
  double c = 0;
  long n = 1;
  double delta = 0.05;
  double K = 0;  // gaussian_gap only
};

enum class LambdaBoundary { interior, lower, upper };

struct LambdaOptimum {
  double lambda_star = 0;
  double value = 0;
  LambdaBoundary boundary = LambdaBoundary::interior;
};

inline constexpr double kLambdaRelativeTolerance = 1e-8;

double lambda_objective(const LambdaProblem& p, double lambda);

/// Golden-section search in ln λ over [10⁻¹⁰, 10¹⁰]·scale, scale = √n/b.
LambdaOptimum optimize_lambda_numeric(const LambdaProblem& p);

}  // namespace gencert
