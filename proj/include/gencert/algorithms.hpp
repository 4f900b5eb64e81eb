#pragma once

#include "gencert/model.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gencert {

/// Deterministic vector-valued learning algorithm A : 𝒳ⁿ → ℝᵈ.
struct StableAlgorithm {
  std::string name;
  Index dim = 1;
  std::function<Vector(const Sample&)> map;
  /// Declared hypothesis sensitivity c_A (for the sample size the algorithm was built for).
  std::optional<double> declared_c_A;
  /// Exact 𝒱(A) = 𝔼‖A(X) − 𝔼A(X')‖² when a closed form is known.
  std::function<double(const FiniteDataSpace&, Index n)> variance_closed_form;

  Vector operator()(const Sample& x) const { return map(x); }
};

using AlgorithmPtr = std::shared_ptr<const StableAlgorithm>;

/// Per-point data the built-in algorithms consume: a feature vector φ(x) per
/// point (columns of `features`) and, for regression, a scalar target per point.
struct AlgorithmSetup {
  Matrix features;  // d × |𝒳|
  Vector targets;   // |𝒳|, used by ridge
  Index n = 1;
  double ridge_lambda = 1.0;
};

/// A(x) ≡ 0 ∈ ℝᵈ.
StableAlgorithm constant_algorithm(Index dim);
/// A(x) = (1/n) Σ φ(xᵢ); c_A = diam φ(𝒳) / n and 𝒱(A) = tr Cov_μ φ / n.
StableAlgorithm mean_embedding_algorithm(const Matrix& features, Index n);
/// Regularized least squares argmin_w (1/n)Σ(⟨w,φ(xᵢ)⟩ − t(xᵢ))² + λ‖w‖² on a
/// fixed design, with the strong-convexity sensitivity bound 2R(RT/√λ + T)/(λn).
StableAlgorithm ridge_algorithm(const Matrix& features, const Vector& targets, double lambda,
                                Index n);

/// Name → factory lookup for algorithms selectable from scenario configs.
class AlgorithmRegistry {
 public:
  using Factory = std::function<StableAlgorithm(const AlgorithmSetup&)>;

  /// Registry pre-populated with constant, mean_embedding and ridge.
  static AlgorithmRegistry with_builtins();

  void add(const std::string& name, Factory factory);
  bool contains(const std::string& name) const { return factories_.count(name) > 0; }
  StableAlgorithm create(const std::string& name, const AlgorithmSetup& setup) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Factory> factories_;
};

enum class SensitivityMode { declared, brute_force };

struct EstimateRegime {
  double value = 0;
  /// "exhaustive", "sampled(<k> base points, seed <s>)", "declared", "closed_form", "monte_carlo".
  std::string regime;
  double std_error = 0;
};

inline constexpr int kSampledBasePoints = 2000;
inline constexpr std::uint64_t kSampledBaseSeed = 0x5EED5A3F1Eull;

/// c_A = max_{k,x,y,y'} ‖A(S_y^k x) − A(S_{y'}^k x)‖.
///
/// brute_force enumerates 𝒳ⁿ within the budget; beyond it a deterministic set
/// of base samples is drawn and every (k, y, y') substitution is still tried.
/// declared echoes the algorithm's declared value, falling back to an
/// exhaustive computation when none is declared and the space is enumerable.
EstimateRegime hypothesis_sensitivity(const StableAlgorithm& algorithm,
                                      const FiniteDataSpace& space, Index n, SensitivityMode mode,
                                      std::uint64_t budget = kDefaultEnumerationBudget);

/// 𝒱(A): closed form if registered, exact enumeration within budget, else
/// Monte Carlo with `mc_samples` draws and a reported standard error.
EstimateRegime algorithm_variance(const StableAlgorithm& algorithm, const FiniteDataSpace& space,
                                  Index n, std::uint64_t budget = kDefaultEnumerationBudget,
                                  int mc_samples = 20000, std::uint64_t mc_seed = 1);

/// Exact 𝒱(A) by enumeration only (throws BudgetExceeded).
double algorithm_variance_exact(const StableAlgorithm& algorithm, const FiniteDataSpace& space,
                                Index n, std::uint64_t budget = kDefaultEnumerationBudget);

/// Calls fn(base sample) on every sample of 𝒳ⁿ when within budget, otherwise on
/// kSampledBasePoints deterministic draws from μⁿ. Returns the regime label.
std::string for_each_base_sample(const FiniteDataSpace& space, Index n, std::uint64_t budget,
                                 const std::function<void(const Sample&)>& fn);

}  // namespace gencert
