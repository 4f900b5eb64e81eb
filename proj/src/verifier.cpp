#include "gencert/verifier.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace gencert {

std::string to_string(Regime r) {
  return r == Regime::exact_enumeration ? "exact_enumeration" : "monte_carlo";
}

MomentCheckReport exact_report(std::string label, double lhs, double rhs) {
  MomentCheckReport r;
  r.label = std::move(label);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.regime = Regime::exact_enumeration;
  r.passed = r.margin >= -kExactMarginTolerance;
  return r;
}

namespace {

Vector random_probabilities(RandomStream& rng, Index size) {
  Vector p(size);
  for (Index i = 0; i < size; ++i) p(i) = 0.05 + rng.uniform();
  return p / p.sum();
}

FiniteDataSpace random_space(RandomStream& rng, Index size) {
  std::vector<std::string> names;
  for (Index i = 0; i < size; ++i) names.push_back("x" + std::to_string(i));
  Vector p = random_probabilities(rng, size);
  // Re-normalize so the sum is 1 to the last ulp the validator can see.
  p(size - 1) = 1.0 - (p.sum() - p(size - 1));
  return FiniteDataSpace(std::move(names), p);
}

/// All samples of 𝒳ⁿ in for_each_sample order with their μⁿ weights.
struct Enumeration {
  std::vector<Sample> samples;
  std::vector<double> weights;
  Index m = 0;
  Index n = 0;
  std::vector<std::uint64_t> stride;  // m^{n−1−k}

  std::size_t index_of_substitution(std::size_t idx, const Sample& x, Index k, int y) const {
    return idx - std::uint64_t(x[k]) * stride[k] + std::uint64_t(y) * stride[k];
  }
};

Enumeration enumerate(const FiniteDataSpace& space, Index n, std::uint64_t budget) {
  Enumeration e;
  e.m = space.size();
  e.n = n;
  e.stride.assign(n, 1);
  for (Index k = n - 2; k >= 0; --k) e.stride[k] = e.stride[k + 1] * std::uint64_t(e.m);
  for_each_sample(space, n, budget, [&](const Sample& x, double w) {
    e.samples.push_back(x);
    e.weights.push_back(w);
  });
  return e;
}

void require_joint_budget(const FiniteDataSpace& space, Index n, Index m, std::uint64_t budget) {
  const std::uint64_t states = sample_space_size(space.size(), n);
  if (states > budget || states > budget / std::uint64_t(std::max<Index>(m, 1)))
    throw BudgetExceeded("enumeration of |X|^n * |H| exceeds budget " + std::to_string(budget));
}

Vector true_losses(const Instance& inst) {
  return inst.loss.table().values * inst.space.probs();
}

Vector empirical_losses(const Instance& inst, const Sample& x) {
  return inst.loss.table().values * x.counts(inst.space.size()) / double(x.size());
}

/// L(h) - L_hat(h) on rows shifted to their minimum, so constant rows give exactly 0.
double generalization_gap(const Instance& inst, const Sample& x, Index h) {
  const auto row = inst.loss.table().values.row(h);
  const Vector w = inst.space.probs() - x.counts(inst.space.size()) / double(x.size());
  return (row.array() - row.minCoeff()).matrix().dot(w);
}

}  // namespace

Instance random_finite_instance(RandomStream& rng, Index space_size, Index num_hypotheses) {
  require(space_size >= 1 && num_hypotheses >= 1, "instance sizes must be positive");
  FiniteDataSpace space = random_space(rng, space_size);
  Matrix table(num_hypotheses, space_size);
  for (Index h = 0; h < num_hypotheses; ++h)
    for (Index x = 0; x < space_size; ++x) table(h, x) = rng.uniform();
  return Instance{std::move(space), LossModel(FiniteTable{table, 1.0}),
                  PriorWeights::uniform(num_hypotheses), Matrix()};
}

ParametricLoss gaussian_bump_loss(const Matrix& features) {
  ParametricLoss p;
  p.dim_d = features.rows();
  p.bound_b = 1.0;
  p.name = "gaussian_bump";
  p.evaluator = [features](const Vector& h, Index x) {
    return -std::expm1(-(h - features.col(x)).squaredNorm() / 2.0);
  };
  return p;
}

Instance random_embedding_instance(RandomStream& rng, Index space_size, Index dim) {
  require(space_size >= 2 && dim >= 1, "embedding instance needs >= 2 points and d >= 1");
  FiniteDataSpace space = random_space(rng, space_size);
  Matrix features(dim, space_size);
  for (Index x = 0; x < space_size; ++x)
    for (Index i = 0; i < dim; ++i) features(i, x) = 2.0 * rng.uniform() - 1.0;
  return Instance{std::move(space), LossModel(gaussian_bump_loss(features)),
                  PriorWeights::lebesgue(), features};
}

double feature_diameter(const Matrix& features) {
  double diam = 0;
  for (Index i = 0; i < features.cols(); ++i)
    for (Index j = i + 1; j < features.cols(); ++j)
      diam = std::max(diam, (features.col(i) - features.col(j)).norm());
  return diam;
}

double exact_mixed_mgf(const HamiltonianSpec& spec, const Instance& inst, Index n, double lambda,
                       std::uint64_t budget) {
  require(spec.is_finite_class(), "exact_mixed_mgf needs a finite hypothesis class");
  require_joint_budget(inst.space, n, inst.loss.num_hypotheses(), budget);
  const Vector L = true_losses(inst);
  LogSumExpAccumulator<> acc;
  for_each_sample(inst.space, n, budget, [&](const Sample& x, double w) {
    if (w <= 0) return;
    const auto q = std::get<FiniteWeights>(posterior(spec, x, inst.prior, inst.loss)).weights;
    const Vector gap = L - empirical_losses(inst, x);
    acc.add(std::log(w) + weighted_log_sum_exp((lambda * gap).eval(), q));
  });
  return acc.value();
}

double bernstein_lambda(double v, double b, double c, Index n, double delta) {
  const double nn = double(n);
  const double K = nn * c * c + std::log(1.0 / delta);
  const double cap = 0.999 * nn / b;
  const double denom = (b / nn) * std::sqrt(K) + std::sqrt(v / nn);
  if (denom <= 0) return cap;
  return std::min(std::sqrt(K) / denom, cap);
}

PropositionReport check_proposition_main(const HamiltonianSpec& spec, const Instance& inst,
                                         Index n, const PropositionF& F, std::uint64_t budget) {
  require(spec.is_finite_class(), "proposition check needs a finite hypothesis class");
  const Index m = inst.loss.num_hypotheses();
  require_joint_budget(inst.space, n, m, budget);
  const Enumeration e = enumerate(inst.space, n, budget);
  const std::size_t S = e.samples.size();
  const double b = inst.loss.bound();
  const Vector L = true_losses(inst);

  PropositionReport out;
  out.c = bounded_difference_coefficient(spec, inst.space, inst.loss, n,
                                         CoefficientMode::brute_force, budget)
              .value;

  Vector lam = Vector::Constant(m, F.lambda);
  Vector penalty = Vector::Zero(m);
  if (F.kind == PropositionF::Kind::bernstein) {
    require_delta(F.delta);
    for (Index h = 0; h < m; ++h) {
      const double v = loss_variance(Hypothesis{h}, inst.space, inst.loss);
      lam(h) = bernstein_lambda(v, b, out.c, n, F.delta);
      penalty(h) = lam(h) * lam(h) / (1.0 - b * lam(h) / double(n)) * v / double(n);
    }
  }

  Matrix hq(S, m);
  Matrix f(S, m);
  Matrix q(S, m);
  for (std::size_t s = 0; s < S; ++s) {
    const Sample& x = e.samples[s];
    hq.row(s) = canonical_hamiltonians(spec, x, inst.prior, inst.loss).transpose();
    q.row(s) = std::get<FiniteWeights>(posterior(spec, x, inst.prior, inst.loss)).weights.transpose();
    const Vector gap = L - empirical_losses(inst, x);
    f.row(s) = (lam.array() * gap.array() - penalty.array()).matrix().transpose();
  }

  LogSumExpAccumulator<> mixed;
  for (std::size_t s = 0; s < S; ++s)
    if (e.weights[s] > 0)
      mixed.add(std::log(e.weights[s]) + weighted_log_sum_exp(f.row(s).transpose().eval(),
                                                               q.row(s).transpose().eval()));

  double sup_psi = -std::numeric_limits<double>::infinity();
  double max_aux = -std::numeric_limits<double>::infinity();
  for (Index h = 0; h < m; ++h) {
    if (inst.prior.weights()(h) <= 0) continue;
    double mean_hq = 0;
    for (std::size_t s = 0; s < S; ++s) mean_hq += e.weights[s] * hq(s, h);
    LogSumExpAccumulator<> psi, aux;
    for (std::size_t s = 0; s < S; ++s) {
      if (e.weights[s] <= 0) continue;
      psi.add(std::log(e.weights[s]) + f(s, h) + hq(s, h) - mean_hq);
      aux.add(std::log(e.weights[s]) + 2.0 * f(s, h));
    }
    sup_psi = std::max(sup_psi, psi.value());
    max_aux = std::max(max_aux, aux.value());
  }

  const std::string name =
      F.kind == PropositionF::Kind::bernstein ? "F=bernstein" : "F=lambda*gap";
  out.main = exact_report("ln EE e^F <= sup psi_F (" + name + ")", mixed.value(), sup_psi);
  if (F.kind == PropositionF::Kind::bernstein) {
    out.auxiliary = exact_report("max_h ln E e^{2F} <= 0", max_aux, 0.0);
    out.psi_bound = exact_report("sup psi_F <= n c^2", sup_psi, double(n) * out.c * out.c);
  }
  return out;
}

std::vector<MomentCheckReport> check_martingale_mgf(const FiniteDataSpace& space, Index n,
                                                    MartingaleCase which, int count,
                                                    std::uint64_t seed) {
  const Enumeration e = enumerate(space, n, kDefaultEnumerationBudget);
  const std::size_t S = e.samples.size();
  const Index m = space.size();
  std::vector<MomentCheckReport> out;

  // E_k f(x) = Σ_y μ(y) f(S_y^k x), indexed [k][s].
  const auto conditional_means = [&](const Vector& f) {
    std::vector<Vector> ek(n, Vector(S));
    for (Index k = 0; k < n; ++k)
      for (std::size_t s = 0; s < S; ++s) {
        double acc = 0;
        for (int y = 0; y < m; ++y) acc += space.prob(y) * f(e.index_of_substitution(s, e.samples[s], k, y));
        ek[k](s) = acc;
      }
    return ek;
  };
  const auto log_centered_mgf = [&](const Vector& f) {
    double mean = 0;
    for (std::size_t s = 0; s < S; ++s) mean += e.weights[s] * f(s);
    LogSumExpAccumulator<> acc;
    for (std::size_t s = 0; s < S; ++s)
      if (e.weights[s] > 0) acc.add(std::log(e.weights[s]) + f(s) - mean);
    return acc.value();
  };

  for (int t = 0; t < count; ++t) {
    RandomStream rng(seed, std::uint64_t(t));
    Vector f(S);
    if (t % 5 == 4) {
      Vector g(m);
      for (Index y = 0; y < m; ++y) g(y) = rng.normal();
      for (std::size_t s = 0; s < S; ++s) {
        double acc = 0;
        for (Index i = 0; i < n; ++i) acc += g(e.samples[s][i]);
        f(s) = acc;
      }
    } else {
      for (std::size_t s = 0; s < S; ++s) f(s) = rng.normal();
    }
    const double u = rng.uniform();
    std::ostringstream label;
    label << "table " << t << " (n=" << n << ", " << (t % 5 == 4 ? "additive" : "generic") << ")";

    if (which == MartingaleCase::i) {
      f *= 0.1 + 1.9 * u;
      const auto ek = conditional_means(f);
      double r2 = -std::numeric_limits<double>::infinity();
      for (Index k = 0; k < n; ++k)
        for (std::size_t s = 0; s < S; ++s) {
          LogSumExpAccumulator<> acc;
          for (int y = 0; y < m; ++y)
            if (space.prob(y) > 0)
              acc.add(std::log(space.prob(y)) + f(e.index_of_substitution(s, e.samples[s], k, y)) -
                      ek[k](s));
          r2 = std::max(r2, acc.value());
        }
      out.push_back(exact_report("case (i) " + label.str() + ": ln E e^{f-Ef} <= n r^2",
                                 log_centered_mgf(f), double(n) * r2));
    } else if (which == MartingaleCase::ii) {
      const auto max_difference = [&](const Vector& g) {
        double c = 0;
        for (Index k = 0; k < n; ++k)
          for (std::size_t s = 0; s < S; ++s) {
            if (e.samples[s][k] != 0) continue;
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int y = 0; y < m; ++y) {
              const double v = g(e.index_of_substitution(s, e.samples[s], k, y));
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
            c = std::max(c, hi - lo);
          }
        return c;
      };
      const double raw = max_difference(f);
      if (raw > 0) f *= (0.1 + 2.9 * u) / raw;
      const double c = max_difference(f);
      out.push_back(exact_report("case (ii) " + label.str() + ": ln E e^{f-Ef} <= n c^2/8",
                                 log_centered_mgf(f), double(n) * c * c / 8.0));
    } else {
      const auto max_excess = [&](const Vector& g) {
        const auto ek = conditional_means(g);
        double bmax = 0;
        for (Index k = 0; k < n; ++k)
          for (std::size_t s = 0; s < S; ++s) bmax = std::max(bmax, g(s) - ek[k](s));
        return bmax;
      };
      const double raw = max_excess(f);
      if (raw > 0) f *= (0.1 + 1.8 * u) / raw;
      double b = max_excess(f);
      if (!(b > 0)) b = 1e-6;
      if (!(b < 2)) throw ContractError("case (iii) generator produced b >= 2");
      const auto ek = conditional_means(f);
      double sum_v = 0;
      for (Index k = 0; k < n; ++k) {
        double vk = 0;
        for (std::size_t s = 0; s < S; ++s) {
          double acc = 0;
          for (int y = 0; y < m; ++y) {
            const double d = f(e.index_of_substitution(s, e.samples[s], k, y)) - ek[k](s);
            acc += space.prob(y) * d * d;
          }
          vk = std::max(vk, acc);
        }
        sum_v += vk;
      }
      out.push_back(exact_report("case (iii) " + label.str() + ": ln E e^{f-Ef} <= sum v_k/(2-b)",
                                 log_centered_mgf(f), sum_v / (2.0 - b)));
    }
  }
  return out;
}

std::vector<MomentCheckReport> check_logZ_bounded_differences(const HamiltonianSpec& spec,
                                                              const Instance& inst, Index n,
                                                              std::uint64_t budget) {
  require(spec.is_finite_class(), "log-partition check needs a finite hypothesis class");
  const Index m = inst.loss.num_hypotheses();
  require_joint_budget(inst.space, n, m, budget);
  const Enumeration e = enumerate(inst.space, n, budget);
  const std::size_t S = e.samples.size();
  const double c = bounded_difference_coefficient(spec, inst.space, inst.loss, n,
                                                  CoefficientMode::brute_force, budget)
                       .value;
  Vector log_z(S);
  Matrix hq(S, m);
  for (std::size_t s = 0; s < S; ++s) {
    log_z(s) = log_partition(spec, e.samples[s], inst.prior, inst.loss);
    hq.row(s) = canonical_hamiltonians(spec, e.samples[s], inst.prior, inst.loss).transpose();
  }
  double max_z = 0, max_hq = 0;
  for (std::size_t s = 0; s < S; ++s)
    for (Index k = 0; k < n; ++k) {
      if (e.samples[s][k] != 0) continue;
      for (int y = 0; y < e.m; ++y)
        for (int yp = y + 1; yp < e.m; ++yp) {
          const std::size_t a = e.index_of_substitution(s, e.samples[s], k, y);
          const std::size_t b = e.index_of_substitution(s, e.samples[s], k, yp);
          max_z = std::max(max_z, std::abs(log_z(a) - log_z(b)));
          for (Index h = 0; h < m; ++h)
            if (inst.prior.weights()(h) > 0) max_hq = std::max(max_hq, std::abs(hq(a, h) - hq(b, h)));
        }
    }
  return {exact_report("max |D ln Z| <= c", max_z, c),
          exact_report("max |D H_Q| <= 2c", max_hq, 2.0 * c)};
}

GaussianIdentityReport check_gaussian_identity(const Vector& w, const Vector& v, double sigma,
                                               double lambda, long mc_samples,
                                               std::uint64_t seed) {
  require(sigma > 0, "sigma must be > 0");
  require(w.size() == v.size() && w.size() >= 1, "w and v must have the same positive dimension");
  require(mc_samples >= 2, "need at least two Monte Carlo samples");
  const double s2 = sigma * sigma;
  const double r2 = (v - w).squaredNorm();
  RandomStream rng(seed);
  double mean = 0, m2 = 0;
  Vector x(w.size());
  for (long i = 0; i < mc_samples; ++i) {
    x = w + sigma * rng.normal_vector(w.size());
    const double val = std::exp(-lambda / (2.0 * s2) * ((x - v).squaredNorm() - (x - w).squaredNorm()));
    const double d = val - mean;
    mean += d / double(i + 1);
    m2 += d * (val - mean);
  }
  const double se = std::sqrt(m2 / double(mc_samples - 1) / double(mc_samples));
  const bool low = lambda < 1 || lambda > 2 || std::sqrt(r2) / sigma > 2;

  const auto make = [&](const std::string& label, double rhs) {
    MomentCheckReport r;
    r.label = label;
    r.lhs = mean;
    r.rhs = rhs;
    r.margin = rhs - mean;
    r.regime = Regime::monte_carlo;
    r.std_error = se;
    r.low_confidence = low || !std::isfinite(mean);
    const double rel = std::abs(mean - rhs) / std::abs(rhs);
    r.passed = std::isfinite(mean) && (rel <= 0.01 || std::abs(mean - rhs) <= 4.0 * se);
    return r;
  };
  std::ostringstream label;
  label << "d=" << w.size() << " lambda=" << lambda << " |v-w|/sigma=" << std::sqrt(r2) / sigma;
  GaussianIdentityReport out;
  out.stated = make("stated form, " + label.str(),
                    std::exp((2.0 * lambda * lambda - lambda) * r2 / (2.0 * s2)));
  out.corrected = make("corrected form, " + label.str(),
                       std::exp((lambda * lambda - lambda) * r2 / (2.0 * s2)));
  out.relative_error_stated = std::abs(mean - out.stated.rhs) / out.stated.rhs;
  out.relative_error_corrected = std::abs(mean - out.corrected.rhs) / out.corrected.rhs;
  return out;
}

std::vector<MomentCheckReport> check_self_bounding(const FiniteDataSpace& space,
                                                   const Matrix& features, Index n,
                                                   const std::vector<double>& t_grid,
                                                   std::uint64_t budget) {
  require(features.cols() == space.size(), "one feature column per point required");
  const StableAlgorithm alg = mean_embedding_algorithm(features, n);
  const double c_a = *alg.declared_c_A;
  require(c_a > 0, "self-bounding check needs distinct features");
  const double a = 4.0 * double(n) * c_a * c_a;
  const Enumeration e = enumerate(space, n, budget);
  const std::size_t S = e.samples.size();
  const Vector mean_a = features * space.probs();
  Vector f(S);
  for (std::size_t s = 0; s < S; ++s) f(s) = (alg(e.samples[s]) - mean_a).squaredNorm();

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < S; ++s) {
    double d2 = 0;
    for (Index k = 0; k < n; ++k) {
      double inf = std::numeric_limits<double>::infinity();
      for (int y = 0; y < e.m; ++y) inf = std::min(inf, f(e.index_of_substitution(s, e.samples[s], k, y)));
      d2 += (f(s) - inf) * (f(s) - inf);
    }
    worst = std::max(worst, d2 - a * f(s));
  }
  std::vector<MomentCheckReport> out;
  out.push_back(exact_report("hypothesis: max (D^2 f - a f) <= 0", worst, 0.0));

  double ef = 0;
  for (std::size_t s = 0; s < S; ++s) ef += e.weights[s] * f(s);
  for (double t : t_grid) {
    require(t > 0 && t < 2, "self-bounding grid must lie in (0,2)");
    const double lambda = t / a;
    LogSumExpAccumulator<> acc;
    for (std::size_t s = 0; s < S; ++s)
      if (e.weights[s] > 0) acc.add(std::log(e.weights[s]) + lambda * (f(s) - ef));
    std::ostringstream label;
    label << "ln E e^{lambda(f-Ef)} <= lambda^2 a Ef/(2 - a lambda), a*lambda=" << t;
    out.push_back(exact_report(label.str(), acc.value(), lambda * lambda * a * ef / (2.0 - a * lambda)));
  }
  return out;
}

double phi(double t) {
  if (std::abs(t) < 1e-2) {
    // Σ t^k/(k+2)!
    double term = 0.5, acc = 0.5;
    for (int k = 1; k <= 10; ++k) {
      term *= t / double(k + 2);
      acc += term;
    }
    return acc;
  }
  return (std::expm1(t) - t) / (t * t);
}

PhiReport check_phi_lemma(const std::vector<double>& grid) {
  PhiReport r;
  r.points = static_cast<int>(grid.size());
  r.phi_at_one = phi(1.0);
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  double prev = -std::numeric_limits<double>::infinity();
  for (double t : sorted) {
    require(t > -10 && t < 2, "phi grid must lie in (-10, 2)");
    const double v = phi(t);
    if (v < prev - 1e-12 * std::max(1.0, std::abs(prev))) ++r.monotone_failures;
    if (t >= 0 && v > (1.0 / (2.0 - t)) * (1.0 + 1e-12)) ++r.bound_failures;
    prev = v;
  }
  r.passed = r.monotone_failures == 0 && r.bound_failures == 0;
  return r;
}

std::vector<double> default_phi_grid(int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = -10.0 + 12.0 * (i + 0.5) / double(points);
  return g;
}

double clopper_pearson_upper(long k, long n, double level) {
  require(n >= 1 && k >= 0 && k <= n, "clopper_pearson_upper: need 0 <= k <= n, n >= 1");
  require(level > 0 && level < 1, "confidence level must lie in (0,1)");
  if (k == n) return 1.0;
  return boost::math::ibeta_inv(double(k + 1), double(n - k), level);
}

namespace {

const std::vector<std::string>& finite_methods() {
  static const std::vector<std::string> m = {method::kBoundedDifferences, method::kBernstein,
                                             method::kEmpiricalBernstein, method::kSubgaussianSup,
                                             method::kSubgaussianLocal};
  return m;
}

const std::vector<std::string>& gaussian_methods() {
  static const std::vector<std::string> m = {
      method::kGaussianGapJoint,   method::kGaussianGapBernstein, method::kGaussianKlExpectation,
      method::kPacBayesGaussianKl, method::kModelSelectionGap,    method::kModelSelectionVariance};
  return m;
}

Scope method_scope(const std::string& m) {
  if (m == method::kGaussianKlExpectation || m == method::kPacBayesGaussianKl ||
      m == method::kModelSelectionGap || m == method::kModelSelectionVariance)
    return Scope::posterior_expectation;
  return Scope::joint_draw;
}

struct TrialOutcome {
  std::vector<double> gap;    // per method; NaN when not evaluated in this trial
  std::vector<double> bound;
};

template <class Fn>
std::vector<TrialOutcome> run_trials(long trials, int jobs, Fn&& fn) {
  std::vector<TrialOutcome> out(trials);
  jobs = std::max(1, std::min<int>(jobs, int(std::max<long>(trials, 1))));
  if (jobs == 1) {
    for (long t = 0; t < trials; ++t) out[t] = fn(t);
    return out;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      try {
        for (long t = j; t < trials; t += jobs) out[t] = fn(t);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

bool is_pure_gibbs(const HamiltonianSpec& spec) {
  return std::holds_alternative<GibbsTerm>(spec.variant());
}

}  // namespace

std::vector<std::string> testable_methods(const HamiltonianSpec& spec) {
  if (spec.is_finite_class()) return finite_methods();
  if (spec.is_gaussian()) return gaussian_methods();
  return {};
}

void check_method_compatibility(const HamiltonianSpec& spec, const Instance& inst,
                                const std::vector<std::string>& methods) {
  const auto allowed = testable_methods(spec);
  if (spec.is_finite_class() && !inst.loss.is_finite())
    throw ContractError("finite-class Hamiltonian on a parametric instance");
  if (!spec.is_finite_class() && inst.loss.is_finite())
    throw ContractError("kernel Hamiltonian on a finite-table instance");
  for (const auto& m : methods) {
    const auto& all = certificate_methods();
    if (std::find(all.begin(), all.end(), m) == all.end())
      throw ContractError("unknown method '" + m + "'");
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
      throw ContractError("method '" + m + "' is incompatible with Hamiltonian " + spec.describe());
  }
}

TrialReport violation_rate(const ViolationScenario& sc) {
  require(sc.trials >= 1, "trials must be >= 1");
  require_delta(sc.delta);
  check_method_compatibility(sc.spec, sc.instance, sc.methods);
  const Instance& inst = sc.instance;
  const Index n = sc.n;
  const std::size_t K = sc.methods.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<TrialOutcome> outcomes;
  std::vector<long> trials_per_method(K, sc.trials);

  if (sc.spec.is_finite_class()) {
    const Index m = inst.loss.num_hypotheses();
    const double b = inst.loss.bound();
    double c;
    try {
      c = bounded_difference_coefficient(sc.spec, inst.space, inst.loss, n, CoefficientMode::analytic,
                                         sc.budget)
              .value;
    } catch (const Unsupported&) {
      c = bounded_difference_coefficient(sc.spec, inst.space, inst.loss, n,
                                         CoefficientMode::brute_force, sc.budget)
              .value;
    }
    const Vector L = true_losses(inst);
    Vector v(m), rho(m);
    double rho_sup = 0;
    for (Index h = 0; h < m; ++h) {
      v(h) = loss_variance(Hypothesis{h}, inst.space, inst.loss);
      rho(h) = subgaussian_parameter(Hypothesis{h}, inst.space, inst.loss,
                                     SubgaussianMode::hoeffding_proxy)
                   .rho;
      if (inst.prior.weights()(h) > 0) rho_sup = std::max(rho_sup, rho(h));
    }
    const double sigma = is_pure_gibbs(sc.spec)
                             ? rho_sup * std::get<GibbsTerm>(sc.spec.variant()).beta / double(n)
                             : c / 2.0;
    const double bd = bound_bounded_differences(b, c, n, sc.delta).value;

    outcomes = run_trials(sc.trials, sc.jobs, [&](long t) {
      RandomStream rng(sc.seed, std::uint64_t(t));
      const Sample x = draw_sample(inst.space, n, rng);
      RandomStream hrng = rng.split(1);
      const Index h = std::get<Index>(
          sample_posterior(posterior(sc.spec, x, inst.prior, inst.loss), hrng));
      const double lhat = empirical_losses(inst, x)(h);
      const double gap = generalization_gap(inst, x, h);
      TrialOutcome o{std::vector<double>(K, gap), std::vector<double>(K, nan)};
      for (std::size_t i = 0; i < K; ++i) {
        const std::string& me = sc.methods[i];
        if (me == method::kBoundedDifferences) o.bound[i] = bd;
        else if (me == method::kBernstein) o.bound[i] = bound_bernstein(v(h), b, c, n, sc.delta).value;
        else if (me == method::kEmpiricalBernstein)
          o.bound[i] = bound_empirical_bernstein(std::clamp(lhat, 0.0, b), b, c, n, sc.delta).value;
        else if (rho_sup > 0) {
          const auto [sup, local] =
              bound_subgaussian(rho_sup, std::max(rho(h), 1e-300), sigma, n, sc.delta);
          o.bound[i] = me == method::kSubgaussianSup ? sup.value : local.value;
        } else {
          o.bound[i] = 0.0;
        }
      }
      return o;
    });
  } else {
    const AlgorithmPtr alg = sc.spec.gaussian_algorithm();
    require(alg != nullptr, "gaussian methods need a gaussian kernel Hamiltonian");
    const Index d = alg->dim;
    const Index npts = inst.space.size();
    const double b = inst.loss.bound();
    GaussianInputs g;
    g.sigma = sc.spec.gaussian_sigma();
    g.c_A = hypothesis_sensitivity(*alg, inst.space, n, SensitivityMode::declared, sc.budget).value;
    g.V = algorithm_variance(*alg, inst.space, n, sc.budget).value;
    require_gaussian_stability(g, n, false);
    bool needs_kl = false;
    for (std::size_t i = 0; i < K; ++i) {
      if (method_scope(sc.methods[i]) == Scope::posterior_expectation) {
        trials_per_method[i] = std::min(sc.trials, sc.posterior_trials);
        if (sc.methods[i] != method::kModelSelectionGap &&
            sc.methods[i] != method::kModelSelectionVariance)
          needs_kl = true;
      }
    }
    if (needs_kl) require(b == 1.0, "kl-form certificates need losses in [0,1]");
    const double joint = bound_gaussian_randomization(g, n, sc.delta, GaussianVariant::gap_joint).value;
    const auto loss_row = [&](const Vector& h) { return inst.loss.row(Hypothesis{h}, npts); };

    outcomes = run_trials(sc.trials, sc.jobs, [&](long t) {
      RandomStream rng(sc.seed, std::uint64_t(t));
      const Sample x = draw_sample(inst.space, n, rng);
      const Vector counts = x.counts(npts);
      const auto post = std::get<GaussianPosterior>(posterior(sc.spec, x, inst.prior, inst.loss));
      RandomStream hrng = rng.split(1);
      const Vector h = std::get<Vector>(sample_posterior(post, hrng));
      const Vector row = loss_row(h);
      const double L = row.dot(inst.space.probs());
      const double lhat = row.dot(counts) / double(n);
      const double vh = (row.array() - L).square().matrix().dot(inst.space.probs());
      TrialOutcome o{std::vector<double>(K, L - lhat), std::vector<double>(K, nan)};

      const bool posterior_trial = t < sc.posterior_trials;
      double mean_kl = 0, mean_gap = 0, mean_v = 0;
      bool have_posterior = false;
      for (std::size_t i = 0; i < K; ++i) {
        const std::string& me = sc.methods[i];
        if (me == method::kGaussianGapJoint) {
          o.bound[i] = joint;
          continue;
        }
        if (me == method::kGaussianGapBernstein) {
          GaussianInputs gh = g;
          gh.v_h = vh;
          o.bound[i] = bound_gaussian_randomization(gh, n, sc.delta, GaussianVariant::gap_bernstein).value;
          continue;
        }
        if (!posterior_trial) {
          o.gap[i] = nan;
          continue;
        }
        if (!have_posterior) {
          RandomStream prng = rng.split(2);
          for (long s = 0; s < sc.posterior_draws; ++s) {
            const Vector hs = post.mean + post.sigma * prng.normal_vector(d);
            const Vector rs = loss_row(hs);
            const double Ls = rs.dot(inst.space.probs());
            const double lh = rs.dot(counts) / double(n);
            if (needs_kl) mean_kl += kl_bernoulli(std::clamp(lh, 0.0, 1.0), std::clamp(Ls, 0.0, 1.0));
            mean_gap += Ls - lh;
            mean_v += (rs.array() - Ls).square().matrix().dot(inst.space.probs());
          }
          mean_kl /= double(sc.posterior_draws);
          mean_gap /= double(sc.posterior_draws);
          mean_v /= double(sc.posterior_draws);
          have_posterior = true;
        }
        if (me == method::kGaussianKlExpectation) {
          o.gap[i] = mean_kl;
          o.bound[i] = bound_gaussian_randomization(g, n, sc.delta, GaussianVariant::kl_expectation).value;
        } else if (me == method::kPacBayesGaussianKl) {
          o.gap[i] = mean_kl;
          o.bound[i] = pac_bayes_gaussian_kl(0.0, g, n, sc.delta).value;
        } else if (me == method::kModelSelectionGap) {
          o.gap[i] = mean_gap;
          o.bound[i] = pac_bayes_model_selection(0.0, g, n, sc.delta, ModelSelectionVariant::gap).value;
        } else if (me == method::kModelSelectionVariance) {
          o.gap[i] = mean_gap;
          o.bound[i] = pac_bayes_model_selection(0.0, g, n, sc.delta, ModelSelectionVariant::variance,
                                                 mean_v)
                           .value;
        }
      }
      return o;
    });
  }

  TrialReport report;
  report.seed = sc.seed;
  report.trials = sc.trials;
  for (std::size_t i = 0; i < K; ++i) {
    MethodStats st;
    st.method = sc.methods[i];
    st.scope = method_scope(sc.methods[i]);
    double sum_gap = 0, sum_bound = 0;
    for (const auto& o : outcomes) {
      if (std::isnan(o.bound[i])) continue;
      ++st.trials;
      sum_gap += o.gap[i];
      sum_bound += o.bound[i];
      if (o.gap[i] > o.bound[i]) ++st.violations;
    }
    if (st.trials > 0) {
      st.violation_rate = double(st.violations) / double(st.trials);
      st.cp_upper = clopper_pearson_upper(st.violations, st.trials);
      st.mean_gap = sum_gap / double(st.trials);
      st.mean_bound = sum_bound / double(st.trials);
      st.mean_slack = st.mean_bound - st.mean_gap;
    }
    report.methods.push_back(st);
  }
  return report;
}

double resolve_beta(const std::string& rule, long n) {
  if (rule == "sqrt(n)") return std::sqrt(double(n));
  if (rule == "n/10") return double(n) / 10.0;
  if (rule == "n") return double(n);
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(rule, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  require(pos == rule.size() && pos > 0, "unrecognized beta rule '" + rule + "'");
  return v;
}

TightnessReport tightness_report(const TightnessGrid& grid) {
  TightnessReport r;
  for (long n : grid.ns)
    for (const auto& rule : grid.betas)
      for (double delta : grid.deltas) {
        TightnessRow row;
        row.n = n;
        row.beta = resolve_beta(rule, n);
        row.delta = delta;
        row.gibbs_bound = gibbs_gap_bound(row.beta, n, delta).value;
        row.baseline = baselines(row.beta, n, delta).gibbs;
        row.ratio = row.gibbs_bound / row.baseline;
        row.improved = row.gibbs_bound < row.baseline;
        if (!row.improved) ++r.failures;
        r.rows.push_back(row);
      }
  for (const auto& p : grid.kl_points)
    for (double lh : p.L_hat) {
      KlChainRow row;
      row.n = p.n;
      row.beta = p.beta;
      row.delta = p.delta;
      row.L_hat = lh;
      row.emp_bernstein = gibbs_empirical_bernstein(lh, p.beta, p.n, p.delta).value;
      row.kl_chain = gibbs_kl_baseline_gap(lh, p.beta, p.n, p.delta);
      row.improved = row.emp_bernstein < row.kl_chain;
      if (!row.improved) ++r.failures;
      r.kl_rows.push_back(row);
    }
  return r;
}

}  // namespace gencert
