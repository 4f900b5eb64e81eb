#include "gencert/algorithms.hpp"
#include "gencert/rng.hpp"

#include <gtest/gtest.h>

using namespace gencert;

namespace {

Matrix random_features(RandomStream& rng, Index d, Index m) {
  Matrix f(d, m);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < m; ++j) f(i, j) = 2 * rng.uniform() - 1;
  return f;
}

double diameter(const Matrix& f) {
  double r = 0;
  for (Index i = 0; i < f.cols(); ++i)
    for (Index j = 0; j < f.cols(); ++j) r = std::max(r, (f.col(i) - f.col(j)).norm());
  return r;
}

}  // namespace

TEST(Sensitivity, ConstantAlgorithmIsZero) {
  const auto alg = constant_algorithm(3);
  const auto space = FiniteDataSpace::uniform(3);
  EXPECT_EQ(hypothesis_sensitivity(alg, space, 3, SensitivityMode::brute_force).value, 0.0);
  EXPECT_EQ(algorithm_variance(alg, space, 3).value, 0.0);
}

TEST(Sensitivity, MeanEmbeddingIsDiameterOverN) {
  RandomStream rng(1);
  const Matrix f = random_features(rng, 2, 3);
  const auto space = FiniteDataSpace::uniform(3);
  const auto alg = mean_embedding_algorithm(f, 4);
  const auto brute = hypothesis_sensitivity(alg, space, 4, SensitivityMode::brute_force);
  EXPECT_EQ(brute.regime, "exhaustive");
  EXPECT_NEAR(brute.value, diameter(f) / 4, 1e-15);
  EXPECT_NEAR(*alg.declared_c_A, diameter(f) / 4, 1e-15);
}

TEST(Sensitivity, BruteForceNeverExceedsDeclared) {
  RandomStream rng(2);
  for (int t = 0; t < 10; ++t) {
    const Matrix f = random_features(rng, 2, 3);
    const auto space = FiniteDataSpace::uniform(3);
    Vector targets(3);
    for (Index i = 0; i < 3; ++i) targets(i) = rng.uniform();
    for (const auto& alg : {mean_embedding_algorithm(f, 4), ridge_algorithm(f, targets, 0.5, 4)}) {
      const double brute = hypothesis_sensitivity(alg, space, 4, SensitivityMode::brute_force).value;
      EXPECT_LE(brute, *alg.declared_c_A + 1e-12) << alg.name;
    }
  }
}

TEST(Variance, TwoPointMeanEmbeddingByHand) {
  // φ ∈ {0, 1}, n = 2: A ∈ {0, ½, ½, 1} with probability ¼ each, so 𝒱 = 1/8.
  Matrix f(1, 2);
  f << 0, 1;
  const auto alg = mean_embedding_algorithm(f, 2);
  const auto space = FiniteDataSpace::uniform(2);
  EXPECT_NEAR(algorithm_variance_exact(alg, space, 2), 0.125, 1e-15);
  EXPECT_NEAR(algorithm_variance(alg, space, 2).value, 0.125, 1e-15);
}

TEST(Variance, BoundedByNTimesSensitivitySquared) {
  RandomStream rng(3);
  for (int t = 0; t < 10; ++t) {
    const Matrix f = random_features(rng, 2, 3);
    const auto space = FiniteDataSpace::uniform(3);
    Vector targets(3);
    for (Index i = 0; i < 3; ++i) targets(i) = rng.uniform();
    for (const auto& alg : {mean_embedding_algorithm(f, 5), ridge_algorithm(f, targets, 1.0, 5)}) {
      const double c = hypothesis_sensitivity(alg, space, 5, SensitivityMode::brute_force).value;
      EXPECT_LE(algorithm_variance_exact(alg, space, 5), 5 * c * c + 1e-12) << alg.name;
    }
  }
}

TEST(Variance, MonteCarloBeyondBudgetAgreesWithClosedForm) {
  RandomStream rng(4);
  const Matrix f = random_features(rng, 2, 4);
  const auto space = FiniteDataSpace::uniform(4);
  auto alg = mean_embedding_algorithm(f, 30);
  const double exact = alg.variance_closed_form(space, 30);
  alg.variance_closed_form = nullptr;
  const auto mc = algorithm_variance(alg, space, 30, 1000, 20000, 9);
  EXPECT_EQ(mc.regime.rfind("monte_carlo", 0), 0u) << mc.regime;
  EXPECT_NEAR(mc.value, exact, 5 * mc.std_error);
}

TEST(Registry, BuiltinsAndCustomAlgorithms) {
  auto reg = AlgorithmRegistry::with_builtins();
  for (const char* name : {"constant", "mean_embedding", "ridge"}) EXPECT_TRUE(reg.contains(name));
  reg.add("first_point", [](const AlgorithmSetup& s) {
    StableAlgorithm a;
    a.name = "first_point";
    a.dim = s.features.rows();
    const Matrix f = s.features;
    a.map = [f](const Sample& x) { return Vector(f.col(x[0])); };
    return a;
  });
  AlgorithmSetup setup;
  setup.features = Matrix::Identity(2, 2);
  setup.n = 3;
  const auto a = reg.create("first_point", setup);
  EXPECT_EQ(a(Sample{1, 0, 0}), Vector(setup.features.col(1)));
  EXPECT_THROW(reg.create("missing", setup), ContractError);
}
