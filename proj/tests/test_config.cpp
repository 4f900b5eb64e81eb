#include "gencert/config.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace gencert;

namespace {

bool mentions(const ConfigError& e, const std::string& text) {
  return std::any_of(e.errors().begin(), e.errors().end(),
                     [&](const std::string& s) { return s.find(text) != std::string::npos; });
}

ConfigError config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a ConfigError";
  return ConfigError({});
}

}  // namespace

TEST(ParseConfig, MinimalGibbsConfigGetsDefaults) {
  const auto c = parse_config_text(R"({"instance": {"kind": "random_table"}})");
  EXPECT_EQ(c.hamiltonian.kind, "gibbs");
  EXPECT_EQ(c.ns, std::vector<long>{100});
  EXPECT_EQ(c.delta, 0.05);
  EXPECT_EQ(c.trials, 1000);
  EXPECT_EQ(c.enumeration_budget, kDefaultEnumerationBudget);
  EXPECT_EQ(c.methods, testable_methods(HamiltonianSpec::gibbs(1)));
  EXPECT_EQ(c.phases, (std::vector<std::string>{"certify", "verify", "compare"}));
  EXPECT_FALSE(c.oracles);
}

TEST(ParseConfig, DomainErrorNamesTheField) {
  const auto e = config_error(R"({"instance": {"kind": "random_table"}, "delta": 1.5})");
  EXPECT_TRUE(mentions(e, "delta"));
}

TEST(ParseConfig, GaussianMethodOnFiniteTableIsIncompatible) {
  const auto e = config_error(R"({"instance": {"kind": "random_table"}, "methods": ["gaussian_gap_joint"]})");
  EXPECT_TRUE(mentions(e, "gaussian_gap_joint"));
  const auto e2 = config_error(R"({"instance": {"kind": "random_table"}, "hamiltonian": {"kind": "gaussian"}})");
  EXPECT_TRUE(mentions(e2, "random_embedding"));
}

TEST(ParseConfig, EveryProblemIsReported) {
  const auto e = config_error(
      R"({"instance": {"kind": "random_table", "colour": 1}, "delta": 0, "trials": -4, "speed": 3,
          "phases": ["certify", "dance"]})");
  EXPECT_GE(e.errors().size(), 5u);
  EXPECT_TRUE(mentions(e, "colour"));
  EXPECT_TRUE(mentions(e, "speed"));
  EXPECT_TRUE(mentions(e, "trials"));
  EXPECT_TRUE(mentions(e, "dance"));
}

TEST(ParseConfig, MissingFilesAndBadJson) {
  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
  const auto e = config_error(R"({"instance": {"kind": "table", "path": "/nonexistent/table.txt"}})");
  EXPECT_TRUE(mentions(e, "instance.path"));
  EXPECT_THROW(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST(ParseConfig, OraclesNeedAFiniteClass) {
  const auto e = config_error(
      R"({"instance": {"kind": "random_embedding"}, "hamiltonian": {"kind": "gaussian"}, "oracles": true})");
  EXPECT_TRUE(mentions(e, "oracles"));
}

TEST(ParseConfig, SampleFilesParse) {
  for (const char* name : {"gibbs_standard.json", "gibbs_oracles.json", "gaussian_embedding.json",
                           "tightness.json", "over_budget.json"})
    EXPECT_NO_THROW(parse_config(std::string(GENCERT_TEST_DATA) + "/" + name)) << name;
}

TEST(LossTable, RoundTrip) {
  const std::string text =
      "# demo\n"
      "points a b c\n"
      "mu 0.5 0.25 0.25\n"
      "b 2\n"
      "prior 1 3\n"
      "loss first 0 1 2\n"
      "loss second 0.5 0.5 0.5\n";
  const auto t = parse_loss_table(text);
  EXPECT_EQ(t.space.size(), 3);
  EXPECT_EQ(t.table.bound_b, 2.0);
  EXPECT_EQ(t.hypotheses, (std::vector<std::string>{"first", "second"}));
  ASSERT_TRUE(t.prior);
  EXPECT_EQ((*t.prior)(1), 3.0);
  const auto again = parse_loss_table(format_loss_table(t));
  EXPECT_EQ(again.table.values, t.table.values);
  EXPECT_EQ(again.space.probs(), t.space.probs());
  EXPECT_EQ(again.space.points(), t.space.points());
}

TEST(LossTable, DefaultsAndErrors) {
  const auto t = parse_loss_table("points a b\nmu 0.5 0.5\nloss h 0 1\n");
  EXPECT_EQ(t.table.bound_b, 1.0);
  EXPECT_FALSE(t.prior);
  EXPECT_THROW(parse_loss_table("points a b\nmu 0.5 0.5\nloss h 0 2\n"), ConfigError);
  EXPECT_THROW(parse_loss_table("points a b\nmu 0.5 0.6\nloss h 0 1\n"), ConfigError);
  EXPECT_THROW(parse_loss_table("points a b\nmu 0.5 0.5\nloss h 0\n"), ConfigError);
  EXPECT_THROW(parse_loss_table("points a b\nmu 0.5 0.5\n"), ConfigError);
  EXPECT_THROW(parse_loss_table("points a b\nmu 0.5 0.5\nwidth 3\nloss h 0 1\n"), ConfigError);
}

TEST(BuildInstance, GaussianSigmaDefaultsToStabilityEdge) {
  const auto c = parse_config_text(
      R"({"instance": {"kind": "random_embedding", "points": 4, "dim": 2}, "hamiltonian": {"kind": "gaussian"}})");
  const Instance inst = build_instance(c);
  const auto spec = build_hamiltonian(c, inst, 100, 0);
  const double c_A = *spec.gaussian_algorithm()->declared_c_A;
  EXPECT_LE(12 * 100 * c_A * c_A, spec.gaussian_sigma() * spec.gaussian_sigma());
  EXPECT_NEAR(spec.gaussian_sigma(), std::sqrt(1200.0) * c_A, 1e-6 * spec.gaussian_sigma());
}
