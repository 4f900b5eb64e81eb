#pragma once

// Data spaces, samples, loss models and the elementary statistics that every
// other part of the engine consumes.

#include "gencert/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gencert {

/// Finite data domain 𝒳 with an explicit probability vector μ.
class FiniteDataSpace {
 public:
  FiniteDataSpace(std::vector<std::string> points, Vector probs);

  /// Uniform measure over `size` points named x0, x1, ...
  static FiniteDataSpace uniform(Index size);

  Index size() const { return static_cast<Index>(points_.size()); }
  const std::vector<std::string>& points() const { return points_; }
  const Vector& probs() const { return probs_; }
  double prob(Index x) const { return probs_(x); }
  /// Index of the named point; throws ContractError if absent.
  Index index_of(const std::string& name) const;

 private:
  std::vector<std::string> points_;
  Vector probs_;
};

/// An n-tuple of point indices.
class Sample {
 public:
  Sample() = default;
  explicit Sample(IndexVector entries);
  Sample(std::initializer_list<int> entries);

  Index size() const { return entries_.size(); }
  int operator[](Index i) const { return entries_(i); }
  const IndexVector& entries() const { return entries_; }

  /// S_y^k: copy with coordinate k (0-based) replaced by y.
  Sample substituted(Index k, int y) const;
  void set(Index k, int y) { entries_(k) = y; }

  /// Throws ContractError unless nonempty with every entry valid for `space`.
  void validate(const FiniteDataSpace& space) const;
  /// Occurrence count of every point.
  Vector counts(Index space_size) const;

  bool operator==(const Sample& other) const { return entries_ == other.entries_; }

 private:
  IndexVector entries_;
};

/// Draws a sample from μⁿ by inverse-CDF on each coordinate.
class RandomStream;
Sample draw_sample(const FiniteDataSpace& space, Index n, RandomStream& rng);

/// A hypothesis is either a row of a finite loss table or a parameter vector in ℝᵈ.
using Hypothesis = std::variant<Index, Vector>;

/// Finite loss table: values(h, x) ∈ [0, b].
struct FiniteTable {
  Matrix values;
  double bound_b = 1.0;
};

/// Parametric loss over ℝᵈ; the evaluator must be deterministic and map into [0, b].
struct ParametricLoss {
  Index dim_d = 1;
  std::function<double(const Vector&, Index)> evaluator;
  double bound_b = 1.0;
  std::string name = "custom";
};

class LossModel {
 public:
  LossModel(FiniteTable table);
  LossModel(ParametricLoss loss);

  bool is_finite() const { return std::holds_alternative<FiniteTable>(model_); }
  double bound() const;
  /// Number of hypotheses of a finite table; throws for parametric models.
  Index num_hypotheses() const;
  Index num_points() const;
  /// Parameter dimension of a parametric model; throws for finite tables.
  Index dim() const;
  const FiniteTable& table() const;
  const ParametricLoss& parametric() const;

  /// Loss value with range checks; throws ContractError on an invalid
  /// hypothesis or a parametric value outside [0, b].
  double operator()(const Hypothesis& h, Index x) const;
  /// Loss of h on every point of a space of `num_points` points.
  Vector row(const Hypothesis& h, Index num_points) const;

 private:
  std::variant<FiniteTable, ParametricLoss> model_;
};

/// Prior measure π on a finite class, or the Lebesgue reference measure on ℝᵈ.
class PriorWeights {
 public:
  explicit PriorWeights(Vector weights);
  static PriorWeights uniform(Index m);
  static PriorWeights lebesgue();

  bool is_lebesgue() const { return lebesgue_; }
  const Vector& weights() const { return weights_; }
  /// ln π(h); -inf for zero weight.
  Vector log_weights() const;

 private:
  PriorWeights() = default;
  Vector weights_;
  bool lebesgue_ = false;
};

double true_loss(const Hypothesis& h, const FiniteDataSpace& space, const LossModel& loss);
double empirical_loss(const Hypothesis& h, const Sample& sample, const LossModel& loss);
double generalization_gap(const Hypothesis& h, const Sample& sample,
                          const FiniteDataSpace& space, const LossModel& loss);
double loss_variance(const Hypothesis& h, const FiniteDataSpace& space, const LossModel& loss);

/// Precomputed per-point losses of one hypothesis; the hot paths of the
/// Monte Carlo harness use it to avoid re-evaluating the loss.
struct LossProfile {
  Vector losses;  // loss(h, x) for every x
  double true_loss = 0;
  double variance = 0;

  LossProfile(const Hypothesis& h, const FiniteDataSpace& space, const LossModel& loss);
  double empirical(const Vector& counts, Index n) const { return losses.dot(counts) / double(n); }
};

/// f(S_y^k x) − f(S_{y'}^k x), with k 0-based.
double partial_difference(const std::function<double(const Sample&)>& f, const Sample& sample,
                          Index k, int y, int y_prime);

enum class SubgaussianMode { hoeffding_proxy, certified_grid };

struct SubgaussianParameter {
  double rho = 0;
  SubgaussianMode mode = SubgaussianMode::hoeffding_proxy;
  /// Human-readable description of how the value was obtained (grids used).
  std::string note;
};

/// Subgaussian parameter of h(X) − 𝔼h(X).
///
/// The Hoeffding proxy (range/2 over the support of μ) is always valid. The
/// certified grid returns the smallest ρ on a geometric grid below the proxy
/// for which 𝔼e^{λ(h−𝔼h)} ≤ e^{λ²ρ²/2} on a symmetric λ grid; it is tighter
/// but only certified on that grid.
SubgaussianParameter subgaussian_parameter(const Hypothesis& h, const FiniteDataSpace& space,
                                           const LossModel& loss, SubgaussianMode mode);

/// Calls fn(sample, μⁿ(sample)) for every sample in 𝒳ⁿ in lexicographic order.
/// Throws BudgetExceeded when |𝒳|ⁿ exceeds `budget`.
void for_each_sample(const FiniteDataSpace& space, Index n, std::uint64_t budget,
                     const std::function<void(const Sample&, double)>& fn);

/// |𝒳|ⁿ saturated at UINT64_MAX.
std::uint64_t sample_space_size(Index space_size, Index n);

}  // namespace gencert
