#include "gencert/verifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace gencert;

namespace {

Instance single_row(const Instance& inst, Index h) {
  const Matrix row = inst.loss.table().values.row(h);
  return Instance{inst.space, LossModel(FiniteTable{row, inst.loss.bound()}), PriorWeights::uniform(1), Matrix()};
}

Instance gibbs_instance(std::uint64_t id, Index points = 3, Index hyps = 4) {
  RandomStream rng(42, id);
  return random_finite_instance(rng, points, hyps);
}

}  // namespace

TEST(ExactMixedMgf, ZeroAtZeroLambda) {
  const Instance inst = gibbs_instance(0);
  EXPECT_NEAR(exact_mixed_mgf(HamiltonianSpec::gibbs(2), inst, 3, 0.0), 0.0, 1e-15);
}

TEST(ExactMixedMgf, FairCoinHandEnumeration) {
  // Δ ∈ {½, 0, −½} with probabilities ¼, ½, ¼: ln 𝔼e^{λΔ} = 2 ln cosh(λ/4).
  Matrix t(1, 2);
  t << 0, 1;
  const Instance inst{FiniteDataSpace::uniform(2), LossModel(FiniteTable{t, 1.0}), PriorWeights::uniform(1), Matrix()};
  for (double lambda : {0.5, 2.0, 7.0})
    EXPECT_NEAR(exact_mixed_mgf(HamiltonianSpec::gibbs(3), inst, 2, lambda), 2 * std::log(std::cosh(lambda / 4)),
                1e-14);
}

TEST(ExactMixedMgf, ConvexInLambdaAndBelowTheorem) {
  for (std::uint64_t id = 0; id < 5; ++id) {
    const Instance inst = gibbs_instance(id);
    const auto spec = HamiltonianSpec::gibbs(2.0 + id);
    const Index n = 4;
    const double c =
        bounded_difference_coefficient(spec, inst.space, inst.loss, n, CoefficientMode::brute_force).value;
    std::vector<double> vals;
    for (int i = 0; i <= 12; ++i) {
      const double lambda = 0.5 * i;
      vals.push_back(exact_mixed_mgf(spec, inst, n, lambda));
      EXPECT_LE(vals.back(), bound_mgf_bounded_differences(1, c, n, lambda) + 1e-9);
    }
    for (std::size_t i = 1; i + 1 < vals.size(); ++i) EXPECT_GE(vals[i - 1] + vals[i + 1] - 2 * vals[i], -1e-12);
  }
}

TEST(ExactMixedMgf, RefusesOverBudget) {
  const Instance inst = gibbs_instance(1, 10, 16);
  EXPECT_THROW(exact_mixed_mgf(HamiltonianSpec::gibbs(1), inst, 8, 1.0, 1000), BudgetExceeded);
}

TEST(Proposition, ZeroFunctionHasZeroMargin) {
  const Instance inst = gibbs_instance(2);
  PropositionF F;
  F.lambda = 0;
  const auto r = check_proposition_main(HamiltonianSpec::gibbs(0), inst, 3, F);
  EXPECT_NEAR(r.main.lhs, 0.0, 1e-15);
  EXPECT_NEAR(r.main.rhs, 0.0, 1e-15);
  EXPECT_TRUE(r.main.passed);
  // With a data-dependent H_Q the right side keeps the e^{H - E H} fluctuation, which is >= 0.
  const auto g = check_proposition_main(HamiltonianSpec::gibbs(1), inst, 3, F);
  EXPECT_NEAR(g.main.lhs, 0.0, 1e-15);
  EXPECT_GE(g.main.rhs, 0.0);
  EXPECT_TRUE(g.main.passed);
}

TEST(Proposition, PriorSamplingCollapsesToPerHypothesisMgf) {
  const Instance inst = gibbs_instance(3);
  const Index n = 3;
  const double lambda = 4;
  PropositionF F;
  F.lambda = lambda;
  const auto r = check_proposition_main(HamiltonianSpec::gibbs(0), inst, n, F);
  double worst = -1e300;
  for (Index h = 0; h < 4; ++h)
    worst = std::max(worst, exact_mixed_mgf(HamiltonianSpec::gibbs(0), single_row(inst, h), n, lambda));
  EXPECT_NEAR(r.main.rhs, worst, 1e-12);
  EXPECT_TRUE(r.main.passed);
}

TEST(Proposition, BernsteinPsiBoundAndAuxiliaryLemma) {
  for (std::uint64_t id = 0; id < 6; ++id) {
    const Instance inst = gibbs_instance(10 + id);
    PropositionF F;
    F.kind = PropositionF::Kind::bernstein;
    F.delta = 0.1;
    const auto r = check_proposition_main(HamiltonianSpec::gibbs(1.0 + id), inst, 4, F);
    ASSERT_TRUE(r.auxiliary && r.psi_bound);
    EXPECT_TRUE(r.main.passed) << r.main.margin;
    EXPECT_TRUE(r.auxiliary->passed) << r.auxiliary->margin;
    EXPECT_TRUE(r.psi_bound->passed) << r.psi_bound->margin;
  }
}

TEST(BernsteinLambda, CappedBelowNOverB) {
  EXPECT_LE(bernstein_lambda(0.0, 1.0, 0.5, 10, 0.05), 0.999 * 10);
  const double v = 0.2, b = 1, c = 0.05, delta = 0.05;
  const Index n = 100;
  const double K = n * c * c + std::log(1 / delta);
  EXPECT_NEAR(bernstein_lambda(v, b, c, n, delta), std::sqrt(K) / ((b / n) * std::sqrt(K) + std::sqrt(v / n)), 1e-12);
}

TEST(Martingale, AllCasesPassOnSmallSpaces) {
  const auto space = FiniteDataSpace::uniform(2);
  for (auto which : {MartingaleCase::i, MartingaleCase::ii, MartingaleCase::iii})
    for (const auto& r : check_martingale_mgf(space, 3, which, 30, 5)) EXPECT_TRUE(r.passed) << r.label << " " << r.margin;
}

TEST(Martingale, ReproducibleFromSeed) {
  const auto space = FiniteDataSpace::uniform(2);
  const auto a = check_martingale_mgf(space, 2, MartingaleCase::ii, 10, 77);
  const auto b = check_martingale_mgf(space, 2, MartingaleCase::ii, 10, 77);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].lhs, b[i].lhs);
}

TEST(LogPartitionDifferences, ZeroTemperatureAndExhaustiveCase) {
  const Instance inst = gibbs_instance(20);
  for (const auto& r : check_logZ_bounded_differences(HamiltonianSpec::gibbs(0), inst, 3)) {
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_TRUE(r.passed);
  }
  for (const auto& r : check_logZ_bounded_differences(HamiltonianSpec::gibbs(3), inst, 3)) EXPECT_TRUE(r.passed);
}

TEST(GaussianIdentity, EqualCentersGiveOne) {
  Vector w = Vector::Constant(2, 0.3);
  const auto r = check_gaussian_identity(w, w, 1.0, 1.5, 10000, 1);
  EXPECT_NEAR(r.stated.lhs, 1.0, 1e-12);
  EXPECT_TRUE(r.stated.passed);
  EXPECT_TRUE(r.corrected.passed);
}

TEST(GaussianIdentity, MonteCarloMatchesTheCorrectedForm) {
  Vector w = Vector::Zero(2), v = Vector::Zero(2);
  v(0) = 1.0;
  for (double lambda : {1.0, 1.5}) {
    const auto r = check_gaussian_identity(w, v, 1.0, lambda, 1'000'000, 3);
    EXPECT_TRUE(r.corrected.passed) << lambda << " " << r.relative_error_corrected;
    EXPECT_NEAR(r.corrected.rhs, std::exp((lambda * lambda - lambda) / 2), 1e-12);
    // The stated closed form overestimates, so it remains a valid upper bound.
    EXPECT_GT(r.stated.rhs, r.stated.lhs);
  }
}

TEST(GaussianIdentity, OutsideTheReliableRangeIsLabelled) {
  Vector w = Vector::Zero(1), v = Vector::Constant(1, 3.0);
  EXPECT_TRUE(check_gaussian_identity(w, v, 1.0, 1.5, 1000, 4).stated.low_confidence);
  EXPECT_TRUE(check_gaussian_identity(w, Vector::Constant(1, 0.5), 1.0, 2.5, 1000, 4).stated.low_confidence);
}

TEST(SelfBounding, MeanEmbeddingExhaustive) {
  Matrix f(2, 2);
  f << 0, 1, 0.5, -0.5;
  const auto reports = check_self_bounding(FiniteDataSpace::uniform(2), f, 4, {1e-8, 0.5, 1.0, 1.9});
  ASSERT_EQ(reports.size(), 5u);
  for (const auto& r : reports) EXPECT_TRUE(r.passed) << r.label;
  EXPECT_NEAR(reports[1].margin, 0.0, 1e-6);
}

TEST(Phi, ValuesAndLemma) {
  EXPECT_NEAR(phi(0.0), 0.5, 1e-15);
  EXPECT_NEAR(phi(1e-9), 0.5, 1e-9);
  EXPECT_NEAR(phi(1.0), std::exp(1.0) - 2, 1e-15);
  const auto r = check_phi_lemma(default_phi_grid(10000));
  EXPECT_EQ(r.points, 10000);
  EXPECT_TRUE(r.passed);
}

TEST(ClopperPearson, KnownValues) {
  EXPECT_NEAR(clopper_pearson_upper(0, 5000), 1 - std::pow(0.001, 1.0 / 5000), 1e-12);
  EXPECT_EQ(clopper_pearson_upper(10, 10), 1.0);
  EXPECT_GT(clopper_pearson_upper(3, 100), 0.03);
}

TEST(ViolationRate, SingleHypothesisHoeffding) {
  RandomStream rng(50);
  const Instance inst = random_finite_instance(rng, 5, 1);
  ViolationScenario sc(inst, HamiltonianSpec::gibbs(3));
  sc.n = 40;
  sc.methods = {method::kBoundedDifferences};
  sc.trials = 5000;
  const auto rep = violation_rate(sc);
  ASSERT_EQ(rep.methods.size(), 1u);
  EXPECT_LE(rep.methods[0].violation_rate, 0.05);
  EXPECT_LT(rep.methods[0].cp_upper, 0.07);
  EXPECT_EQ(rep.rng, "philox4x32-10");
}

TEST(ViolationRate, ConstantLossNeverViolates) {
  const Instance inst{FiniteDataSpace::uniform(3), LossModel(FiniteTable{Matrix::Constant(4, 3, 0.6), 1.0}),
                      PriorWeights::uniform(4), Matrix()};
  ViolationScenario sc(inst, HamiltonianSpec::gibbs(5));
  sc.n = 20;
  sc.trials = 300;
  sc.methods = testable_methods(sc.spec);
  for (const auto& m : violation_rate(sc).methods) {
    EXPECT_EQ(m.violations, 0) << m.method;
    EXPECT_LE(m.violations, m.trials);
  }
}

TEST(ViolationRate, SerialAndParallelAreBitIdentical) {
  RandomStream rng(51);
  ViolationScenario sc(random_finite_instance(rng, 6, 8), HamiltonianSpec::gibbs(4));
  sc.n = 30;
  sc.trials = 400;
  sc.methods = testable_methods(sc.spec);
  const auto a = violation_rate(sc);
  sc.jobs = 3;
  const auto b = violation_rate(sc);
  ASSERT_EQ(a.methods.size(), b.methods.size());
  for (std::size_t i = 0; i < a.methods.size(); ++i) {
    EXPECT_EQ(a.methods[i].violations, b.methods[i].violations);
    EXPECT_EQ(a.methods[i].mean_gap, b.methods[i].mean_gap);
    EXPECT_EQ(a.methods[i].mean_bound, b.methods[i].mean_bound);
  }
}

TEST(ViolationRate, GaussianScenarioRunsAllTestableMethods) {
  RandomStream rng(52);
  const Instance inst = random_embedding_instance(rng, 5, 2);
  const Index n = 50;
  const auto alg = std::make_shared<const StableAlgorithm>(mean_embedding_algorithm(inst.features, n));
  const double sigma = std::sqrt(12.0 * n) * *alg->declared_c_A * 1.01;
  ViolationScenario sc(inst, HamiltonianSpec::gaussian(sigma, alg));
  sc.n = n;
  sc.trials = 300;
  sc.posterior_trials = 20;
  sc.posterior_draws = 500;
  sc.methods = testable_methods(sc.spec);
  const auto rep = violation_rate(sc);
  EXPECT_EQ(rep.methods.size(), sc.methods.size());
  for (const auto& m : rep.methods) {
    EXPECT_EQ(m.violations, 0) << m.method;
    EXPECT_EQ(m.trials, m.scope == Scope::joint_draw ? 300 : 20);
  }
}

TEST(ViolationRate, IncompatibleMethodIsRejected) {
  RandomStream rng(53);
  ViolationScenario sc(random_finite_instance(rng, 3, 2), HamiltonianSpec::gibbs(1));
  sc.methods = {method::kGaussianGapJoint};
  EXPECT_THROW(violation_rate(sc), ContractError);
}

TEST(Tightness, ExamplesAndGrid) {
  const auto rep = tightness_report(TightnessGrid{});
  EXPECT_EQ(rep.rows.size(), 27u);
  EXPECT_EQ(rep.failures, 0);
  bool spot = false;
  for (const auto& r : rep.rows)
    if (r.n == 10000 && r.beta == 100 && r.delta == 0.05) {
      spot = true;
      EXPECT_NEAR(r.ratio, 0.223, 1e-3);
    }
  EXPECT_TRUE(spot);
  ASSERT_EQ(rep.kl_rows.size(), 3u);
  for (const auto& r : rep.kl_rows) EXPECT_TRUE(r.improved);
  EXPECT_DOUBLE_EQ(resolve_beta("sqrt(n)", 100), 10.0);
  EXPECT_DOUBLE_EQ(resolve_beta("n/10", 100), 10.0);
  EXPECT_DOUBLE_EQ(resolve_beta("2.5", 100), 2.5);
  EXPECT_THROW(resolve_beta("n^2", 100), ContractError);
}

TEST(Tightness, ZeroTemperatureBeatsBaselineForModerateDelta) {
  for (long n : {10L, 100L, 1000L, 100000L})
    for (int i = 1; i <= 90; ++i) {
      const double delta = i / 100.0;
      EXPECT_LT(gibbs_gap_bound(0, n, delta).value, baselines(0, n, delta).gibbs);
    }
}
