#include "gencert/hamiltonian.hpp"
#include "gencert/rng.hpp"
#include "gencert/verifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace gencert;

namespace {

const double kPi = std::acos(-1.0);

LossModel two_by_two(double a, double b, double c, double d) {
  Matrix t(2, 2);
  t << a, b, c, d;
  return LossModel(FiniteTable{t, 1.0});
}

AlgorithmPtr mean_of(const Matrix& f, Index n) {
  return std::make_shared<const StableAlgorithm>(mean_embedding_algorithm(f, n));
}

}  // namespace

TEST(HamiltonianValue, GibbsExamples) {
  const auto loss = two_by_two(0, 1, 0.5, 0.5);
  const Sample s{0, 1, 1, 0};
  EXPECT_EQ(hamiltonian_value(HamiltonianSpec::gibbs(0), Hypothesis{Index(0)}, s, loss), 0.0);
  EXPECT_DOUBLE_EQ(hamiltonian_value(HamiltonianSpec::gibbs(4), Hypothesis{Index(1)}, s, loss), -2.0);
  EXPECT_DOUBLE_EQ(hamiltonian_value(HamiltonianSpec::gibbs(4), Hypothesis{Index(0)}, s, loss), -2.0);
}

TEST(HamiltonianValue, GaussianKernelIsZeroAtTheAlgorithmOutput) {
  RandomStream rng(2);
  const Instance inst = random_embedding_instance(rng, 3, 2);
  const auto spec = HamiltonianSpec::gaussian(0.7, mean_of(inst.features, 3));
  const Sample s{0, 2, 2};
  const Vector a = (*spec.gaussian_algorithm())(s);
  EXPECT_EQ(hamiltonian_value(spec, Hypothesis{a}, s, inst.loss), 0.0);
  Vector off = a;
  off(0) += 0.7;
  EXPECT_NEAR(hamiltonian_value(spec, Hypothesis{off}, s, inst.loss), -0.5, 1e-15);
}

TEST(HamiltonianSpec, RejectsMismatchedLossModels) {
  RandomStream rng(3);
  const Instance emb = random_embedding_instance(rng, 3, 2);
  const auto loss = two_by_two(0, 1, 1, 0);
  const auto gauss = HamiltonianSpec::gaussian(1.0, mean_of(emb.features, 2));
  EXPECT_THROW(hamiltonian_value(HamiltonianSpec::gibbs(1), Hypothesis{Index(0)}, Sample{0, 1}, emb.loss),
               ContractError);
  EXPECT_THROW(hamiltonian_value(gauss, Hypothesis{Index(0)}, Sample{0, 1}, loss), ContractError);
  EXPECT_THROW(HamiltonianSpec::gaussian(0.0, mean_of(emb.features, 2)), ContractError);
  EXPECT_THROW(HamiltonianSpec::gibbs(-1), ContractError);
}

TEST(LogPartition, GibbsAtZeroTemperatureIsLogPriorMass) {
  const auto loss = two_by_two(0, 1, 0.3, 0.2);
  EXPECT_NEAR(log_partition(HamiltonianSpec::gibbs(0), Sample{0, 1}, PriorWeights::uniform(2), loss),
              std::log(2.0), 1e-15);
}

TEST(LogPartition, GaussianNormalizerAndShift) {
  Matrix f(1, 2);
  f << -1, 1;
  const Instance inst{FiniteDataSpace::uniform(2), LossModel(gaussian_bump_loss(f)), PriorWeights::lebesgue(), f};
  const double sigma = 0.3;
  const auto spec = HamiltonianSpec::gaussian(sigma, mean_of(f, 3));
  for (const Sample& s : {Sample{0, 0, 1}, Sample{1, 1, 1}})
    EXPECT_NEAR(log_partition(spec, s, inst.prior, inst.loss), std::log(std::sqrt(2 * kPi * sigma * sigma)),
                1e-14);
  const auto zeta = [](const Sample& s) { return 0.25 * s[0] - 1.5; };
  const auto shifted = HamiltonianSpec::shifted(spec, zeta);
  const Sample s{1, 0, 1};
  EXPECT_NEAR(log_partition(shifted, s, inst.prior, inst.loss) - log_partition(spec, s, inst.prior, inst.loss),
              zeta(s), 1e-14);
}

TEST(Posterior, GibbsAtZeroIsNormalizedPrior) {
  Vector w(3);
  w << 1, 2, 5;
  Matrix t = Matrix::Constant(3, 2, 0.5);
  t(0, 0) = 0;
  const LossModel loss(FiniteTable{t, 1.0});
  const auto post = std::get<FiniteWeights>(posterior(HamiltonianSpec::gibbs(0), Sample{0, 1}, PriorWeights(w), loss));
  EXPECT_TRUE(post.weights.isApprox(w / 8.0, 1e-15));
}

TEST(Posterior, LargeBetaConcentratesOnMinimizer) {
  const auto loss = two_by_two(0, 0, 1, 1);
  const Index n = 4;
  const auto post = std::get<FiniteWeights>(
      posterior(HamiltonianSpec::gibbs(50.0 * n), Sample{0, 1, 1, 0}, PriorWeights::uniform(2), loss));
  EXPECT_NEAR(post.weights(0), 1.0, 1e-15);
}

TEST(Posterior, ShiftIsAGauge) {
  const auto loss = two_by_two(0.1, 0.9, 0.6, 0.2);
  const auto base = HamiltonianSpec::gibbs(3);
  const auto shifted = HamiltonianSpec::shifted(base, [](const Sample& s) { return 10.0 * s[1]; });
  const Sample s{1, 1, 0};
  const auto a = std::get<FiniteWeights>(posterior(base, s, PriorWeights::uniform(2), loss));
  const auto b = std::get<FiniteWeights>(posterior(shifted, s, PriorWeights::uniform(2), loss));
  EXPECT_TRUE(a.weights.isApprox(b.weights, 1e-14));
  for (Index h = 0; h < 2; ++h)
    EXPECT_NEAR(canonical_hamiltonian(base, Hypothesis{h}, s, PriorWeights::uniform(2), loss),
                canonical_hamiltonian(shifted, Hypothesis{h}, s, PriorWeights::uniform(2), loss), 1e-13);
}

TEST(CanonicalHamiltonian, Examples) {
  Matrix one(1, 2);
  one << 0.3, 0.9;
  const LossModel single(FiniteTable{one, 1.0});
  EXPECT_NEAR(canonical_hamiltonian(HamiltonianSpec::gibbs(7), Hypothesis{Index(0)}, Sample{0, 1},
                                    PriorWeights::uniform(1), single),
              0.0, 1e-15);
  const Index m = 5;
  const LossModel loss(FiniteTable{Matrix::Constant(m, 2, 0.4), 1.0});
  EXPECT_NEAR(canonical_hamiltonian(HamiltonianSpec::gibbs(0), Hypothesis{Index(2)}, Sample{0},
                                    PriorWeights::uniform(m), loss),
              -std::log(double(m)), 1e-15);
}

TEST(SamplePosterior, DegenerateAndBalancedWeights) {
  RandomStream rng(5);
  FiniteWeights w{Vector(2)};
  w.weights << 1, 0;
  for (int i = 0; i < 100; ++i) EXPECT_EQ(std::get<Index>(sample_posterior(w, rng)), 0);
  w.weights << 0.5, 0.5;
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += std::get<Index>(sample_posterior(w, rng)) == 0;
  EXPECT_NEAR(hits / 100000.0, 0.5, 0.01);
}

TEST(SamplePosterior, TinyGaussianWidthReturnsTheMean) {
  RandomStream rng(6);
  GaussianPosterior g{Vector::Constant(3, 0.25), 1e-15};
  const Vector h = std::get<Vector>(sample_posterior(g, rng));
  EXPECT_TRUE(h.isApprox(g.mean, 1e-13));
}

TEST(SamplePosterior, MetropolisMatchesGaussianMoments) {
  Matrix f(1, 2);
  f << -1, 1;
  const Instance inst{FiniteDataSpace::uniform(2), LossModel(gaussian_bump_loss(f)), PriorWeights::lebesgue(), f};
  // Kernel exponent u²/2 (H = -G) on the same algorithm: the chain targets N(A(x), 1).
  const auto spec = HamiltonianSpec::lipschitz([](const Vector& u) { return 0.5 * u.squaredNorm(); }, 1.0,
                                               mean_of(f, 2));
  const Sample s{1, 1};
  const auto chain = std::get<McmcChain>(posterior(spec, s, inst.prior, inst.loss));
  RandomStream rng(7);
  double m1 = 0, m2 = 0;
  const int N = 4000;
  for (int i = 0; i < N; ++i) {
    const double h = std::get<Vector>(sample_posterior(chain, rng))(0);
    m1 += h;
    m2 += h * h;
  }
  m1 /= N;
  m2 /= N;
  EXPECT_NEAR(m1, 1.0, 0.1);
  EXPECT_NEAR(m2 - m1 * m1, 1.0, 0.15);
}

TEST(Coefficient, GibbsAnalyticExamples) {
  const auto loss = two_by_two(0, 1, 1, 0);
  const auto space = FiniteDataSpace::uniform(2);
  EXPECT_NEAR(bounded_difference_coefficient(HamiltonianSpec::gibbs(10), space, loss, 100,
                                             CoefficientMode::analytic)
                  .value,
              0.1, 1e-15);
  EXPECT_EQ(bounded_difference_coefficient(HamiltonianSpec::gibbs(0), space, loss, 100, CoefficientMode::analytic)
                .value,
            0.0);
}

TEST(Coefficient, BruteForceNeverExceedsAnalytic) {
  for (int t = 0; t < 15; ++t) {
    RandomStream rng(100, std::uint64_t(t));
    const Instance inst = random_finite_instance(rng, 3, 4);
    for (double beta : {0.5, 3.0, 9.0}) {
      const auto spec = HamiltonianSpec::gibbs(beta);
      const double brute =
          bounded_difference_coefficient(spec, inst.space, inst.loss, 3, CoefficientMode::brute_force).value;
      const double analytic =
          bounded_difference_coefficient(spec, inst.space, inst.loss, 3, CoefficientMode::analytic).value;
      EXPECT_LE(brute, analytic + 1e-12);
      EXPECT_GT(brute, 0.0);
    }
  }
}

TEST(Coefficient, CompositeAndShiftedAddUp) {
  const auto loss = two_by_two(0, 1, 1, 0);
  const auto space = FiniteDataSpace::uniform(2);
  const auto comp = HamiltonianSpec::composite({HamiltonianSpec::gibbs(2), HamiltonianSpec::gibbs(3)});
  EXPECT_NEAR(bounded_difference_coefficient(comp, space, loss, 10, CoefficientMode::analytic).value, 0.5, 1e-15);
  const auto sh = HamiltonianSpec::shifted(HamiltonianSpec::gibbs(2), [](const Sample&) { return 0.0; }, 0.25);
  EXPECT_NEAR(bounded_difference_coefficient(sh, space, loss, 10, CoefficientMode::analytic).value, 0.45, 1e-15);
  // Composite Hamiltonians act additively on the exponent.
  const Sample s{0, 1, 1};
  EXPECT_NEAR(hamiltonian_value(comp, Hypothesis{Index(1)}, s, loss),
              hamiltonian_value(HamiltonianSpec::gibbs(5), Hypothesis{Index(1)}, s, loss), 1e-15);
}

TEST(Coefficient, GaussianKernelIsUnsupported) {
  Matrix f(1, 2);
  f << 0, 1;
  const auto spec = HamiltonianSpec::gaussian(1.0, mean_of(f, 2));
  EXPECT_THROW(bounded_difference_coefficient(spec, FiniteDataSpace::uniform(2), LossModel(gaussian_bump_loss(f)), 2,
                                              CoefficientMode::analytic),
               Unsupported);
}

TEST(Coefficient, LipschitzKernelIsLipTimesSensitivity) {
  Matrix f(1, 3);
  f << 0, 0.5, 2;
  const auto alg = mean_of(f, 4);
  const auto spec = HamiltonianSpec::norm_kernel(0.5, alg);
  EXPECT_NEAR(bounded_difference_coefficient(spec, FiniteDataSpace::uniform(3), LossModel(gaussian_bump_loss(f)), 4,
                                             CoefficientMode::analytic)
                  .value,
              2.0 * (2.0 / 4), 1e-15);
}

TEST(CustomTerm, DeclaredDifferenceAndValue) {
  const auto loss = two_by_two(0, 1, 1, 0);
  const auto spec = HamiltonianSpec::custom(
      "penalty", [](const Hypothesis& h, const Sample& s) { return -0.1 * double(std::get<Index>(h)) * s.size(); },
      0.0);
  EXPECT_NEAR(hamiltonian_value(spec, Hypothesis{Index(1)}, Sample{0, 1}, loss), -0.2, 1e-15);
  EXPECT_EQ(bounded_difference_coefficient(spec, FiniteDataSpace::uniform(2), loss, 2, CoefficientMode::analytic)
                .value,
            0.0);
}
