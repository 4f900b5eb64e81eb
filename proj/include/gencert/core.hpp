#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace gencert {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVector = Eigen::VectorXi;
using Index = Eigen::Index;

inline constexpr std::uint64_t kDefaultEnumerationBudget = 1'000'000;
inline constexpr double kAnalyticTolerance = 1e-10;

/// Input outside an operation's domain (bad index, δ ∉ (0,1), loss outside [0,b], ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exact computation would exceed the configured enumeration budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested combination has no implementation (e.g. analytic c for a gaussian kernel).
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A theorem precondition does not hold for the supplied inputs.
class PreconditionViolated : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerically stable ln Σ exp(x_i). Entries equal to -inf are ignored; an
/// all -inf (or empty) input gives -inf.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using S = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<S>::infinity();
  const S m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

/// ln Σ w_i exp(x_i) with w_i ≥ 0.
template <typename DerivedX, typename DerivedW>
typename DerivedX::Scalar weighted_log_sum_exp(const Eigen::DenseBase<DerivedX>& x,
                                               const Eigen::DenseBase<DerivedW>& w) {
  using S = typename DerivedX::Scalar;
  S m = -std::numeric_limits<S>::infinity();
  for (Index i = 0; i < x.size(); ++i)
    if (w(i) > 0 && x(i) > m) m = x(i);
  if (!std::isfinite(m)) return m;
  S acc = 0;
  for (Index i = 0; i < x.size(); ++i)
    if (w(i) > 0) acc += w(i) * std::exp(x(i) - m);
  return m + std::log(acc);
}

/// Incremental log-sum-exp accumulator for streamed terms.
template <typename S = Scalar>
class LogSumExpAccumulator {
 public:
  void add(S term) {
    if (term == -std::numeric_limits<S>::infinity()) return;
    if (term <= max_) {
      sum_ += std::exp(term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - term) + 1;
      max_ = term;
    }
  }
  S value() const {
    if (sum_ == 0) return -std::numeric_limits<S>::infinity();
    return max_ + std::log(sum_);
  }

 private:
  S max_ = -std::numeric_limits<S>::infinity();
  S sum_ = 0;
};

inline void require(bool cond, const std::string& message) {
  if (!cond) throw ContractError(message);
}

inline void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ContractError("delta must lie in the open interval (0,1), got " + std::to_string(delta));
}

}  // namespace gencert
