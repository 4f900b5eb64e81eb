#include "gencert/algorithms.hpp"

#include "gencert/rng.hpp"

#include <cmath>
#include <sstream>

namespace gencert {

StableAlgorithm constant_algorithm(Index dim) {
  StableAlgorithm a;
  a.name = "constant";
  a.dim = dim;
  a.map = [dim](const Sample&) { return Vector(Vector::Zero(dim)); };
  a.declared_c_A = 0.0;
  a.variance_closed_form = [](const FiniteDataSpace&, Index) { return 0.0; };
  return a;
}

StableAlgorithm mean_embedding_algorithm(const Matrix& features, Index n) {
  require(features.cols() >= 1 && features.rows() >= 1, "mean embedding needs features");
  require(n >= 1, "sample size must be positive");
  double diam = 0;
  for (Index i = 0; i < features.cols(); ++i)
    for (Index j = i + 1; j < features.cols(); ++j)
      diam = std::max(diam, (features.col(i) - features.col(j)).norm());

  StableAlgorithm a;
  a.name = "mean_embedding";
  a.dim = features.rows();
  a.map = [features](const Sample& x) {
    Vector acc = Vector::Zero(features.rows());
    for (Index i = 0; i < x.size(); ++i) acc += features.col(x[i]);
    return Vector(acc / double(x.size()));
  };
  a.declared_c_A = diam / double(n);
  a.variance_closed_form = [features](const FiniteDataSpace& space, Index m) {
    const Vector mean = features * space.probs();
    double tr = 0;
    for (Index x = 0; x < space.size(); ++x)
      tr += space.prob(x) * (features.col(x) - mean).squaredNorm();
    return tr / double(m);
  };
  return a;
}

StableAlgorithm ridge_algorithm(const Matrix& features, const Vector& targets, double lambda,
                                Index n) {
  require(lambda > 0, "ridge regularization must be positive");
  require(targets.size() == features.cols(), "ridge: one target per point required");
  double radius = 0;
  for (Index x = 0; x < features.cols(); ++x) radius = std::max(radius, features.col(x).norm());
  const double tmax = targets.cwiseAbs().maxCoeff();

  StableAlgorithm a;
  a.name = "ridge";
  a.dim = features.rows();
  a.map = [features, targets, lambda](const Sample& x) {
    const Index d = features.rows();
    Matrix gram = lambda * Matrix::Identity(d, d);
    Vector rhs = Vector::Zero(d);
    const double inv_n = 1.0 / double(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      const auto z = features.col(x[i]);
      gram.noalias() += inv_n * z * z.transpose();
      rhs.noalias() += inv_n * targets(x[i]) * z;
    }
    return Vector(gram.llt().solve(rhs));
  };
  const double w_max = tmax / std::sqrt(lambda);
  a.declared_c_A = 2.0 * radius * (radius * w_max + tmax) / (lambda * double(n));
  return a;
}

AlgorithmRegistry AlgorithmRegistry::with_builtins() {
  AlgorithmRegistry r;
  r.add("constant", [](const AlgorithmSetup& s) { return constant_algorithm(s.features.rows()); });
  r.add("mean_embedding",
        [](const AlgorithmSetup& s) { return mean_embedding_algorithm(s.features, s.n); });
  r.add("ridge", [](const AlgorithmSetup& s) {
    return ridge_algorithm(s.features, s.targets, s.ridge_lambda, s.n);
  });
  return r;
}

void AlgorithmRegistry::add(const std::string& name, Factory factory) {
  factories_[name] = std::move(factory);
}

StableAlgorithm AlgorithmRegistry::create(const std::string& name,
                                          const AlgorithmSetup& setup) const {
  const auto it = factories_.find(name);
  require(it != factories_.end(), "unknown algorithm '" + name + "'");
  return it->second(setup);
}

std::vector<std::string> AlgorithmRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : factories_) out.push_back(name);
  return out;
}

std::string for_each_base_sample(const FiniteDataSpace& space, Index n, std::uint64_t budget,
                                 const std::function<void(const Sample&)>& fn) {
  if (sample_space_size(space.size(), n) <= budget) {
    for_each_sample(space, n, budget, [&](const Sample& x, double) { fn(x); });
    return "exhaustive";
  }
  RandomStream rng(kSampledBaseSeed);
  for (int i = 0; i < kSampledBasePoints; ++i) fn(draw_sample(space, n, rng));
  std::ostringstream label;
  label << "sampled(" << kSampledBasePoints << " base points, seed " << kSampledBaseSeed << ")";
  return label.str();
}

EstimateRegime hypothesis_sensitivity(const StableAlgorithm& algorithm,
                                      const FiniteDataSpace& space, Index n, SensitivityMode mode,
                                      std::uint64_t budget) {
  require(n >= 1, "sample size must be positive");
  if (mode == SensitivityMode::declared) {
    if (algorithm.declared_c_A) return {*algorithm.declared_c_A, "declared", 0.0};
    if (sample_space_size(space.size(), n) > budget)
      throw BudgetExceeded("algorithm '" + algorithm.name +
                           "' declares no c_A and the sample space is too large to enumerate");
  }
  double best = 0;
  const bool exhaustive = sample_space_size(space.size(), n) <= budget;
  const std::string regime = for_each_base_sample(space, n, budget, [&](const Sample& base) {
    for (Index k = 0; k < n; ++k) {
      // D^k does not depend on x_k; skip duplicate base points.
      if (exhaustive && base[k] != 0) continue;
      std::vector<Vector> outputs;
      outputs.reserve(space.size());
      for (int y = 0; y < space.size(); ++y) outputs.push_back(algorithm(base.substituted(k, y)));
      for (std::size_t y = 0; y < outputs.size(); ++y)
        for (std::size_t yp = y + 1; yp < outputs.size(); ++yp)
          best = std::max(best, (outputs[y] - outputs[yp]).norm());
    }
  });
  return {best, regime, 0.0};
}

double algorithm_variance_exact(const StableAlgorithm& algorithm, const FiniteDataSpace& space,
                                Index n, std::uint64_t budget) {
  Vector mean = Vector::Zero(algorithm.dim);
  double second = 0;
  for_each_sample(space, n, budget, [&](const Sample& x, double w) {
    const Vector a = algorithm(x);
    mean += w * a;
    second += w * a.squaredNorm();
  });
  return std::max(0.0, second - mean.squaredNorm());
}

EstimateRegime algorithm_variance(const StableAlgorithm& algorithm, const FiniteDataSpace& space,
                                  Index n, std::uint64_t budget, int mc_samples,
                                  std::uint64_t mc_seed) {
  if (algorithm.variance_closed_form)
    return {algorithm.variance_closed_form(space, n), "closed_form", 0.0};
  if (sample_space_size(space.size(), n) <= budget)
    return {algorithm_variance_exact(algorithm, space, n, budget), "exhaustive", 0.0};

  require(mc_samples >= 2, "Monte Carlo variance needs at least two samples");
  // Unbiased estimator: ‖A − Ā‖² summed over draws / (m − 1).
  std::vector<Vector> outputs;
  outputs.reserve(mc_samples);
  RandomStream rng(mc_seed);
  Vector mean = Vector::Zero(algorithm.dim);
  for (int i = 0; i < mc_samples; ++i) {
    outputs.push_back(algorithm(draw_sample(space, n, rng)));
    mean += outputs.back();
  }
  mean /= double(mc_samples);
  std::vector<double> sq(mc_samples);
  double acc = 0;
  for (int i = 0; i < mc_samples; ++i) acc += (sq[i] = (outputs[i] - mean).squaredNorm());
  const double m = double(mc_samples);
  const double value = acc / (m - 1.0);
  double var_sq = 0;
  for (double s : sq) var_sq += (s * m / (m - 1.0) - value) * (s * m / (m - 1.0) - value);
  const double se = std::sqrt(var_sq / (m - 1.0) / m);
  return {value, "monte_carlo(" + std::to_string(mc_samples) + " draws)", se};
}

}  // namespace gencert
