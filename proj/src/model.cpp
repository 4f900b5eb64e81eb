#include "gencert/model.hpp"

#include "gencert/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gencert {

FiniteDataSpace::FiniteDataSpace(std::vector<std::string> points, Vector probs)
    : points_(std::move(points)), probs_(std::move(probs)) {
  require(!points_.empty(), "data space needs at least one point");
  require(static_cast<Index>(points_.size()) == probs_.size(),
          "data space: number of probabilities differs from number of points");
  std::set<std::string> seen;
  for (const auto& p : points_) require(seen.insert(p).second, "data space: duplicate point '" + p + "'");
  for (Index i = 0; i < probs_.size(); ++i)
    require(std::isfinite(probs_(i)) && probs_(i) >= 0.0, "data space: probabilities must be >= 0");
  require(std::abs(probs_.sum() - 1.0) <= 1e-12, "data space: probabilities must sum to 1 within 1e-12");
}

FiniteDataSpace FiniteDataSpace::uniform(Index size) {
  require(size >= 1, "data space needs at least one point");
  std::vector<std::string> names;
  for (Index i = 0; i < size; ++i) names.push_back("x" + std::to_string(i));
  return FiniteDataSpace(std::move(names), Vector::Constant(size, 1.0 / double(size)));
}

Index FiniteDataSpace::index_of(const std::string& name) const {
  const auto it = std::find(points_.begin(), points_.end(), name);
  require(it != points_.end(), "unknown point '" + name + "'");
  return static_cast<Index>(it - points_.begin());
}

Sample::Sample(IndexVector entries) : entries_(std::move(entries)) {}

Sample::Sample(std::initializer_list<int> entries) : entries_(static_cast<Index>(entries.size())) {
  Index i = 0;
  for (int e : entries) entries_(i++) = e;
}

Sample Sample::substituted(Index k, int y) const {
  require(k >= 0 && k < size(), "substitution index out of range");
  Sample out = *this;
  out.entries_(k) = y;
  return out;
}

void Sample::validate(const FiniteDataSpace& space) const {
  require(size() >= 1, "sample must be nonempty");
  for (Index i = 0; i < size(); ++i)
    require(entries_(i) >= 0 && entries_(i) < space.size(), "sample entry out of range");
}

Vector Sample::counts(Index space_size) const {
  Vector c = Vector::Zero(space_size);
  for (Index i = 0; i < size(); ++i) c(entries_(i)) += 1.0;
  return c;
}

Sample draw_sample(const FiniteDataSpace& space, Index n, RandomStream& rng) {
  Vector cdf(space.size());
  double acc = 0;
  for (Index x = 0; x < space.size(); ++x) cdf(x) = (acc += space.prob(x));
  IndexVector entries(n);
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    Index x = 0;
    while (x + 1 < space.size() && (cdf(x) <= u || space.prob(x) == 0.0)) ++x;
    entries(i) = static_cast<int>(x);
  }
  return Sample(std::move(entries));
}

LossModel::LossModel(FiniteTable table) : model_(std::move(table)) {
  const auto& t = std::get<FiniteTable>(model_);
  require(t.bound_b > 0, "loss bound b must be positive");
  require(t.values.rows() >= 1 && t.values.cols() >= 1, "loss table must be nonempty");
  for (Index i = 0; i < t.values.rows(); ++i)
    for (Index j = 0; j < t.values.cols(); ++j)
      require(t.values(i, j) >= 0.0 && t.values(i, j) <= t.bound_b,
              "loss table entry outside [0, b]");
}

LossModel::LossModel(ParametricLoss loss) : model_(std::move(loss)) {
  const auto& p = std::get<ParametricLoss>(model_);
  require(p.bound_b > 0, "loss bound b must be positive");
  require(p.dim_d >= 1, "parametric loss dimension must be positive");
  require(static_cast<bool>(p.evaluator), "parametric loss needs an evaluator");
}

double LossModel::bound() const {
  return std::visit([](const auto& m) { return m.bound_b; }, model_);
}

Index LossModel::num_hypotheses() const { return table().values.rows(); }

Index LossModel::num_points() const {
  if (!is_finite()) throw Unsupported("parametric loss has no fixed point count");
  return table().values.cols();
}

Index LossModel::dim() const { return parametric().dim_d; }

const FiniteTable& LossModel::table() const {
  if (!is_finite()) throw Unsupported("operation needs a finite loss table");
  return std::get<FiniteTable>(model_);
}

const ParametricLoss& LossModel::parametric() const {
  if (is_finite()) throw Unsupported("operation needs a parametric loss");
  return std::get<ParametricLoss>(model_);
}

double LossModel::operator()(const Hypothesis& h, Index x) const {
  if (const auto* t = std::get_if<FiniteTable>(&model_)) {
    const Index* row = std::get_if<Index>(&h);
    require(row != nullptr, "finite loss table needs a hypothesis index");
    require(*row >= 0 && *row < t->values.rows(), "hypothesis index out of range");
    require(x >= 0 && x < t->values.cols(), "point index out of range");
    return t->values(*row, x);
  }
  const auto& p = std::get<ParametricLoss>(model_);
  const Vector* theta = std::get_if<Vector>(&h);
  require(theta != nullptr, "parametric loss needs a parameter vector");
  require(theta->size() == p.dim_d, "parameter vector has wrong dimension");
  const double v = p.evaluator(*theta, x);
  if (!(v >= 0.0 && v <= p.bound_b))
    throw ContractError("parametric loss '" + p.name + "' returned value outside [0, b]");
  return v;
}

Vector LossModel::row(const Hypothesis& h, Index num_points) const {
  Vector out(num_points);
  for (Index x = 0; x < num_points; ++x) out(x) = (*this)(h, x);
  return out;
}

PriorWeights::PriorWeights(Vector weights) : weights_(std::move(weights)) {
  require(weights_.size() >= 1, "prior needs at least one weight");
  bool any_positive = false;
  for (Index i = 0; i < weights_.size(); ++i) {
    require(std::isfinite(weights_(i)) && weights_(i) >= 0.0, "prior weights must be >= 0");
    any_positive = any_positive || weights_(i) > 0.0;
  }
  require(any_positive, "prior needs at least one positive weight");
}

PriorWeights PriorWeights::uniform(Index m) { return PriorWeights(Vector::Ones(m)); }

PriorWeights PriorWeights::lebesgue() {
  PriorWeights p;
  p.lebesgue_ = true;
  return p;
}

Vector PriorWeights::log_weights() const {
  if (lebesgue_) throw Unsupported("Lebesgue prior has no finite weight vector");
  return weights_.array().log();
}

double true_loss(const Hypothesis& h, const FiniteDataSpace& space, const LossModel& loss) {
  return loss.row(h, space.size()).dot(space.probs());
}

double empirical_loss(const Hypothesis& h, const Sample& sample, const LossModel& loss) {
  require(sample.size() >= 1, "sample must be nonempty");
  double acc = 0;
  for (Index i = 0; i < sample.size(); ++i) acc += loss(h, sample[i]);
  return acc / double(sample.size());
}

double generalization_gap(const Hypothesis& h, const Sample& sample,
                          const FiniteDataSpace& space, const LossModel& loss) {
  return true_loss(h, space, loss) - empirical_loss(h, sample, loss);
}

double loss_variance(const Hypothesis& h, const FiniteDataSpace& space, const LossModel& loss) {
  const Vector r = loss.row(h, space.size());
  const double mean = r.dot(space.probs());
  return (r.array() - mean).square().matrix().dot(space.probs());
}

LossProfile::LossProfile(const Hypothesis& h, const FiniteDataSpace& space, const LossModel& loss)
    : losses(loss.row(h, space.size())) {
  true_loss = losses.dot(space.probs());
  variance = (losses.array() - true_loss).square().matrix().dot(space.probs());
}

double partial_difference(const std::function<double(const Sample&)>& f, const Sample& sample,
                          Index k, int y, int y_prime) {
  require(k >= 0 && k < sample.size(), "partial difference: index k out of range");
  if (y == y_prime) return 0.0;
  return f(sample.substituted(k, y)) - f(sample.substituted(k, y_prime));
}

namespace {

double log_centered_mgf(const Vector& values, const Vector& probs, double mean, double lambda) {
  return weighted_log_sum_exp((lambda * (values.array() - mean)).matrix(), probs);
}

}  // namespace

SubgaussianParameter subgaussian_parameter(const Hypothesis& h, const FiniteDataSpace& space,
                                           const LossModel& loss, SubgaussianMode mode) {
  const Vector r = loss.row(h, space.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index x = 0; x < r.size(); ++x) {
    if (space.prob(x) <= 0) continue;
    lo = std::min(lo, r(x));
    hi = std::max(hi, r(x));
  }
  require(std::isfinite(lo), "subgaussian parameter: empty support");
  const double proxy = (hi - lo) / 2.0;

  SubgaussianParameter out;
  out.mode = mode;
  out.rho = proxy;
  if (mode == SubgaussianMode::hoeffding_proxy || proxy == 0.0) {
    out.note = "hoeffding proxy (max-min)/2 over supp(mu)";
    return out;
  }

  // ρ grid: proxy·0.97^j, j = 0..200.  λ grid: ±10^t / proxy, t ∈ [-2, 3] in 101 steps.
  constexpr int kRhoSteps = 200;
  constexpr double kRhoRatio = 0.97;
  constexpr int kLambdaSteps = 101;
  const double mean = r.dot(space.probs());
  std::vector<double> log_mgf;
  std::vector<double> lambdas;
  for (int i = 0; i < kLambdaSteps; ++i) {
    const double mag = std::pow(10.0, -2.0 + 5.0 * i / (kLambdaSteps - 1)) / proxy;
    for (double lam : {mag, -mag}) {
      lambdas.push_back(lam);
      log_mgf.push_back(log_centered_mgf(r, space.probs(), mean, lam));
    }
  }
  double best = proxy;
  for (int j = 1; j <= kRhoSteps; ++j) {
    const double rho = proxy * std::pow(kRhoRatio, j);
    bool ok = true;
    for (std::size_t i = 0; i < lambdas.size() && ok; ++i) {
      const double rhs = lambdas[i] * lambdas[i] * rho * rho / 2.0;
      ok = log_mgf[i] <= rhs + 1e-12 * std::max(1.0, rhs);
    }
    if (!ok) break;
    best = rho;
  }
  out.rho = best;
  std::ostringstream note;
  note << "certified grid: rho = proxy*0.97^j (j<=200), lambda = +-10^t/proxy, t in [-2,3] ("
       << kLambdaSteps << " magnitudes); heuristic outside the lambda grid";
  out.note = note.str();
  return out;
}

std::uint64_t sample_space_size(Index space_size, Index n) {
  std::uint64_t total = 1;
  for (Index i = 0; i < n; ++i) {
    if (total > std::numeric_limits<std::uint64_t>::max() / std::uint64_t(space_size))
      return std::numeric_limits<std::uint64_t>::max();
    total *= std::uint64_t(space_size);
  }
  return total;
}

void for_each_sample(const FiniteDataSpace& space, Index n, std::uint64_t budget,
                     const std::function<void(const Sample&, double)>& fn) {
  require(n >= 1, "sample size must be positive");
  const std::uint64_t states = sample_space_size(space.size(), n);
  if (states > budget)
    throw BudgetExceeded("enumeration of |X|^n = " + std::to_string(space.size()) + "^" +
                         std::to_string(n) + " states exceeds budget " + std::to_string(budget));
  Sample x(IndexVector::Zero(n));
  const Index m = space.size();
  for (std::uint64_t s = 0; s < states; ++s) {
    double w = 1.0;
    for (Index i = 0; i < n; ++i) w *= space.prob(x[i]);
    fn(x, w);
    for (Index i = n - 1; i >= 0; --i) {
      if (x[i] + 1 < m) {
        x.set(i, x[i] + 1);
        break;
      }
      x.set(i, 0);
    }
  }
}

}  // namespace gencert
