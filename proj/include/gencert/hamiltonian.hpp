#pragma once

// Hamiltonian descriptions of stochastic algorithms: dQ_x(h) ∝ e^{H(h,x)} dπ(h).

#include "gencert/algorithms.hpp"
#include "gencert/model.hpp"
#include "gencert/rng.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gencert {

class HamiltonianSpec;

/// H(h,x) = −β L̂(h,x); finite loss tables only.
struct GibbsTerm {
  double beta = 0;
};

/// H(h,x) = −‖h − A(x)‖² / 2σ².
struct GaussianKernelTerm {
  double sigma = 1;
  AlgorithmPtr algorithm;
};

/// H(h,x) = −G(h − A(x)) with G ≥ 0 Lipschitz.
struct LipschitzKernelTerm {
  std::function<double(const Vector&)> kernel_exponent;
  double lip_constant = 0;
  AlgorithmPtr algorithm;
  /// ln ∫ e^{−G(u)} du when known in closed form.
  std::optional<double> log_normalizer;
  /// Proposal scale for the Metropolis sampler; defaults to 1/(2‖G‖_Lip).
  std::optional<double> proposal_scale;
  std::string name = "lipschitz";
};

struct CompositeTerm {
  std::vector<HamiltonianSpec> parts;
};

/// base(h,x) + ζ(x). Defines the same algorithm as `base`.
struct ShiftedTerm {
  std::shared_ptr<const HamiltonianSpec> base;
  std::function<double(const Sample&)> shift;
  /// Declared bounded-difference coefficient of ζ, if known.
  std::optional<double> shift_difference;
};

/// User-supplied term, e.g. a computational-cost or empirical-variance penalty
/// to combine with a Gibbs Hamiltonian through CompositeTerm.
struct CustomTerm {
  std::string name;
  std::function<double(const Hypothesis&, const Sample&)> value;
  std::optional<double> declared_difference;
};

class HamiltonianSpec {
 public:
  using Variant = std::variant<GibbsTerm, GaussianKernelTerm, LipschitzKernelTerm, CompositeTerm,
                               ShiftedTerm, CustomTerm>;

  HamiltonianSpec(Variant v);

  static HamiltonianSpec gibbs(double beta);
  static HamiltonianSpec gaussian(double sigma, AlgorithmPtr algorithm);
  static HamiltonianSpec lipschitz(std::function<double(const Vector&)> exponent,
                                   double lip_constant, AlgorithmPtr algorithm);
  /// G(u) = ‖u‖/σ, with its closed-form normalizer and Lipschitz constant 1/σ.
  static HamiltonianSpec norm_kernel(double sigma, AlgorithmPtr algorithm);
  static HamiltonianSpec composite(std::vector<HamiltonianSpec> parts);
  static HamiltonianSpec shifted(HamiltonianSpec base, std::function<double(const Sample&)> shift,
                                 std::optional<double> shift_difference = std::nullopt);
  static HamiltonianSpec custom(std::string name,
                                std::function<double(const Hypothesis&, const Sample&)> value,
                                std::optional<double> declared_difference = std::nullopt);

  const Variant& variant() const { return v_; }
  /// True when every term acts on a finite hypothesis class (Gibbs/custom only).
  bool is_finite_class() const;
  /// True for gaussian kernels, possibly wrapped in shifts.
  bool is_gaussian() const;
  /// The algorithm of a gaussian kernel (through shifts); nullptr otherwise.
  AlgorithmPtr gaussian_algorithm() const;
  double gaussian_sigma() const;
  std::string describe() const;

 private:
  Variant v_;
};

/// Categorical posterior over a finite class.
struct FiniteWeights {
  Vector weights;
};

struct GaussianPosterior {
  Vector mean;
  double sigma = 1;
};

/// Random-walk Metropolis targeting exp(log_density).
struct McmcChain {
  std::function<double(const Vector&)> log_density;
  Vector initial;
  double proposal_scale = 0.5;
  int burn_in = 1000;
  int thinning = 10;
};

using PosteriorDistribution = std::variant<FiniteWeights, GaussianPosterior, McmcChain>;

struct McmcOptions {
  std::optional<double> proposal_scale;
  int burn_in = 1000;
  int thinning = 10;
};

double hamiltonian_value(const HamiltonianSpec& spec, const Hypothesis& h, const Sample& sample,
                         const LossModel& loss);
/// H(h, x) for every hypothesis of a finite class.
Vector hamiltonian_values(const HamiltonianSpec& spec, const Sample& sample, const LossModel& loss);

double log_partition(const HamiltonianSpec& spec, const Sample& sample, const PriorWeights& prior,
                     const LossModel& loss);

PosteriorDistribution posterior(const HamiltonianSpec& spec, const Sample& sample,
                                const PriorWeights& prior, const LossModel& loss,
                                const McmcOptions& mcmc = {});

/// H_Q(h,x) = H(h,x) − ln Z(x).
double canonical_hamiltonian(const HamiltonianSpec& spec, const Hypothesis& h,
                             const Sample& sample, const PriorWeights& prior,
                             const LossModel& loss);
/// Finite class: ln Q_x(h)/π(h) for all h (entries with π(h) = 0 are -inf).
Vector canonical_hamiltonians(const HamiltonianSpec& spec, const Sample& sample,
                              const PriorWeights& prior, const LossModel& loss);

Hypothesis sample_posterior(const PosteriorDistribution& dist, RandomStream& rng);

enum class CoefficientMode { analytic, brute_force };

/// Bounded-difference coefficient c with D^k_{y,y'} H(h,x) ≤ c.
///
/// analytic: Gibbs β·b/n, Lipschitz kernel ‖G‖_Lip·c_A, composites add up.
/// Gaussian kernels are not bounded-difference Hamiltonians and throw
/// Unsupported. brute_force maximizes over h, k, y, y' and base samples x
/// (exhaustive within the budget, sampled beyond) for finite classes.
EstimateRegime bounded_difference_coefficient(const HamiltonianSpec& spec,
                                              const FiniteDataSpace& space, const LossModel& loss,
                                              Index n, CoefficientMode mode,
                                              std::uint64_t budget = kDefaultEnumerationBudget);

}  // namespace gencert
