#include "gencert/hamiltonian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gencert {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Vector& as_vector(const Hypothesis& h, Index dim) {
  const Vector* v = std::get_if<Vector>(&h);
  require(v != nullptr, "kernel Hamiltonians need a parameter-vector hypothesis");
  require(v->size() == dim, "hypothesis dimension does not match the algorithm");
  return *v;
}

void require_parametric(const LossModel& loss, const char* what) {
  if (loss.is_finite())
    throw ContractError(std::string(what) + " Hamiltonian requires a parametric loss model");
}

/// Smallest default Metropolis step over the kernel terms of a parametric spec.
double default_proposal_scale(const HamiltonianSpec& spec) {
  return std::visit(
      overloaded{
          [](const GaussianKernelTerm& g) { return g.sigma / 2.0; },
          [](const LipschitzKernelTerm& l) {
            if (l.proposal_scale) return *l.proposal_scale;
            return l.lip_constant > 0 ? 1.0 / (2.0 * l.lip_constant) : 0.5;
          },
          [](const CompositeTerm& c) {
            double s = std::numeric_limits<double>::infinity();
            for (const auto& p : c.parts) s = std::min(s, default_proposal_scale(p));
            return std::isfinite(s) ? s : 0.5;
          },
          [](const ShiftedTerm& s) { return default_proposal_scale(*s.base); },
          [](const auto&) { return std::numeric_limits<double>::infinity(); }},
      spec.variant());
}

AlgorithmPtr first_algorithm(const HamiltonianSpec& spec) {
  return std::visit(overloaded{[](const GaussianKernelTerm& g) { return g.algorithm; },
                               [](const LipschitzKernelTerm& l) { return l.algorithm; },
                               [](const CompositeTerm& c) {
                                 for (const auto& p : c.parts)
                                   if (auto a = first_algorithm(p)) return a;
                                 return AlgorithmPtr{};
                               },
                               [](const ShiftedTerm& s) { return first_algorithm(*s.base); },
                               [](const auto&) { return AlgorithmPtr{}; }},
                    spec.variant());
}

}  // namespace

HamiltonianSpec::HamiltonianSpec(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{[](const GibbsTerm& g) {
                          require(std::isfinite(g.beta) && g.beta >= 0, "Gibbs beta must be >= 0");
                        },
                        [](const GaussianKernelTerm& g) {
                          require(g.sigma > 0, "gaussian kernel sigma must be > 0");
                          require(g.algorithm != nullptr, "gaussian kernel needs an algorithm");
                        },
                        [](const LipschitzKernelTerm& l) {
                          require(l.lip_constant >= 0, "Lipschitz constant must be >= 0");
                          require(l.algorithm != nullptr, "Lipschitz kernel needs an algorithm");
                          require(static_cast<bool>(l.kernel_exponent),
                                  "Lipschitz kernel needs an exponent function");
                        },
                        [](const CompositeTerm& c) {
                          require(!c.parts.empty(), "composite Hamiltonian needs parts");
                          const bool finite = c.parts.front().is_finite_class();
                          for (const auto& p : c.parts)
                            require(p.is_finite_class() == finite,
                                    "composite parts must act on the same hypothesis space");
                        },
                        [](const ShiftedTerm& s) {
                          require(s.base != nullptr && static_cast<bool>(s.shift),
                                  "shifted Hamiltonian needs a base and a shift");
                        },
                        [](const CustomTerm& c) {
                          require(static_cast<bool>(c.value), "custom term needs a value function");
                        }},
             v_);
}

HamiltonianSpec HamiltonianSpec::gibbs(double beta) { return HamiltonianSpec(GibbsTerm{beta}); }

HamiltonianSpec HamiltonianSpec::gaussian(double sigma, AlgorithmPtr algorithm) {
  return HamiltonianSpec(GaussianKernelTerm{sigma, std::move(algorithm)});
}

HamiltonianSpec HamiltonianSpec::lipschitz(std::function<double(const Vector&)> exponent,
                                           double lip_constant, AlgorithmPtr algorithm) {
  LipschitzKernelTerm t;
  t.kernel_exponent = std::move(exponent);
  t.lip_constant = lip_constant;
  t.algorithm = std::move(algorithm);
  return HamiltonianSpec(std::move(t));
}

HamiltonianSpec HamiltonianSpec::norm_kernel(double sigma, AlgorithmPtr algorithm) {
  require(sigma > 0, "norm kernel sigma must be > 0");
  require(algorithm != nullptr, "norm kernel needs an algorithm");
  const double d = double(algorithm->dim);
  LipschitzKernelTerm t;
  t.kernel_exponent = [sigma](const Vector& u) { return u.norm() / sigma; };
  t.lip_constant = 1.0 / sigma;
  t.algorithm = std::move(algorithm);
  // ∫ e^{−‖u‖/σ} du = σ^d · Γ(d) · 2π^{d/2} / Γ(d/2)
  t.log_normalizer = d * std::log(sigma) + std::lgamma(d) + std::log(2.0) +
                     0.5 * d * std::log(std::numbers::pi) - std::lgamma(d / 2.0);
  t.name = "norm";
  return HamiltonianSpec(std::move(t));
}

HamiltonianSpec HamiltonianSpec::composite(std::vector<HamiltonianSpec> parts) {
  return HamiltonianSpec(CompositeTerm{std::move(parts)});
}

HamiltonianSpec HamiltonianSpec::shifted(HamiltonianSpec base,
                                         std::function<double(const Sample&)> shift,
                                         std::optional<double> shift_difference) {
  return HamiltonianSpec(ShiftedTerm{std::make_shared<const HamiltonianSpec>(std::move(base)),
                                     std::move(shift), shift_difference});
}

HamiltonianSpec HamiltonianSpec::custom(std::string name,
                                        std::function<double(const Hypothesis&, const Sample&)> value,
                                        std::optional<double> declared_difference) {
  return HamiltonianSpec(CustomTerm{std::move(name), std::move(value), declared_difference});
}

bool HamiltonianSpec::is_finite_class() const {
  return std::visit(overloaded{[](const GibbsTerm&) { return true; },
                               [](const CustomTerm&) { return true; },
                               [](const CompositeTerm& c) { return c.parts.front().is_finite_class(); },
                               [](const ShiftedTerm& s) { return s.base->is_finite_class(); },
                               [](const auto&) { return false; }},
                    v_);
}

bool HamiltonianSpec::is_gaussian() const {
  return std::visit(overloaded{[](const GaussianKernelTerm&) { return true; },
                               [](const ShiftedTerm& s) { return s.base->is_gaussian(); },
                               [](const auto&) { return false; }},
                    v_);
}

AlgorithmPtr HamiltonianSpec::gaussian_algorithm() const {
  if (!is_gaussian()) return nullptr;
  if (const auto* s = std::get_if<ShiftedTerm>(&v_)) return s->base->gaussian_algorithm();
  return std::get<GaussianKernelTerm>(v_).algorithm;
}

double HamiltonianSpec::gaussian_sigma() const {
  if (!is_gaussian()) throw Unsupported("not a gaussian kernel Hamiltonian");
  if (const auto* s = std::get_if<ShiftedTerm>(&v_)) return s->base->gaussian_sigma();
  return std::get<GaussianKernelTerm>(v_).sigma;
}

std::string HamiltonianSpec::describe() const {
  std::ostringstream os;
  std::visit(overloaded{[&](const GibbsTerm& g) { os << "gibbs(beta=" << g.beta << ")"; },
                        [&](const GaussianKernelTerm& g) {
                          os << "gaussian(sigma=" << g.sigma << ", A=" << g.algorithm->name << ")";
                        },
                        [&](const LipschitzKernelTerm& l) {
                          os << "lipschitz(" << l.name << ", lip=" << l.lip_constant
                             << ", A=" << l.algorithm->name << ")";
                        },
                        [&](const CompositeTerm& c) {
                          os << "composite(";
                          for (std::size_t i = 0; i < c.parts.size(); ++i)
                            os << (i ? " + " : "") << c.parts[i].describe();
                          os << ")";
                        },
                        [&](const ShiftedTerm& s) { os << "shifted(" << s.base->describe() << ")"; },
                        [&](const CustomTerm& c) { os << "custom(" << c.name << ")"; }},
             v_);
  return os.str();
}

double hamiltonian_value(const HamiltonianSpec& spec, const Hypothesis& h, const Sample& sample,
                         const LossModel& loss) {
  return std::visit(
      overloaded{
          [&](const GibbsTerm& g) {
            if (!loss.is_finite()) throw ContractError("Gibbs Hamiltonian requires a finite loss table");
            return -g.beta * empirical_loss(h, sample, loss);
          },
          [&](const GaussianKernelTerm& g) {
            require_parametric(loss, "gaussian kernel");
            const Vector& v = as_vector(h, g.algorithm->dim);
            return -(v - (*g.algorithm)(sample)).squaredNorm() / (2.0 * g.sigma * g.sigma);
          },
          [&](const LipschitzKernelTerm& l) {
            require_parametric(loss, "Lipschitz kernel");
            const Vector& v = as_vector(h, l.algorithm->dim);
            return -l.kernel_exponent(v - (*l.algorithm)(sample));
          },
          [&](const CompositeTerm& c) {
            double acc = 0;
            for (const auto& p : c.parts) acc += hamiltonian_value(p, h, sample, loss);
            return acc;
          },
          [&](const ShiftedTerm& s) {
            return hamiltonian_value(*s.base, h, sample, loss) + s.shift(sample);
          },
          [&](const CustomTerm& c) { return c.value(h, sample); }},
      spec.variant());
}

Vector hamiltonian_values(const HamiltonianSpec& spec, const Sample& sample, const LossModel& loss) {
  if (!spec.is_finite_class()) throw Unsupported("hamiltonian_values needs a finite hypothesis class");
  if (!loss.is_finite()) throw ContractError("finite-class Hamiltonian requires a finite loss table");
  const Index m = loss.num_hypotheses();
  return std::visit(
      overloaded{
          [&](const GibbsTerm& g) {
            require(sample.size() >= 1, "sample must be nonempty");
            for (Index i = 0; i < sample.size(); ++i)
              require(sample[i] >= 0 && sample[i] < loss.num_points(), "sample entry out of range");
            const Vector counts = sample.counts(loss.num_points());
            return Vector(-g.beta * (loss.table().values * counts) / double(sample.size()));
          },
          [&](const CompositeTerm& c) {
            Vector acc = Vector::Zero(m);
            for (const auto& p : c.parts) acc += hamiltonian_values(p, sample, loss);
            return acc;
          },
          [&](const ShiftedTerm& s) {
            return Vector(hamiltonian_values(*s.base, sample, loss).array() + s.shift(sample));
          },
          [&](const CustomTerm& c) {
            Vector out(m);
            for (Index h = 0; h < m; ++h) out(h) = c.value(Hypothesis{h}, sample);
            return out;
          },
          [&](const auto&) -> Vector { throw Unsupported("kernel term in finite class"); }},
      spec.variant());
}

namespace {

void require_prior_matches(const PriorWeights& prior, const LossModel& loss) {
  require(!prior.is_lebesgue(), "finite class needs prior weights, not Lebesgue measure");
  require(prior.weights().size() == loss.num_hypotheses(),
          "prior weight count differs from number of hypotheses");
}

double parametric_log_partition(const HamiltonianSpec& spec, const Sample& sample) {
  return std::visit(
      overloaded{[&](const GaussianKernelTerm& g) {
                   return 0.5 * double(g.algorithm->dim) *
                          std::log(2.0 * std::numbers::pi * g.sigma * g.sigma);
                 },
                 [&](const LipschitzKernelTerm& l) {
                   if (!l.log_normalizer)
                     throw Unsupported("Lipschitz kernel '" + l.name +
                                       "' has no closed-form partition function");
                   return *l.log_normalizer;
                 },
                 [&](const ShiftedTerm& s) {
                   return parametric_log_partition(*s.base, sample) + s.shift(sample);
                 },
                 [&](const CompositeTerm& c) {
                   if (c.parts.size() == 1) return parametric_log_partition(c.parts.front(), sample);
                   throw Unsupported("no closed-form partition function for composite kernels");
                   return 0.0;
                 },
                 [&](const auto&) -> double {
                   throw Unsupported("no closed-form partition function for this Hamiltonian");
                 }},
      spec.variant());
}

}  // namespace

double log_partition(const HamiltonianSpec& spec, const Sample& sample, const PriorWeights& prior,
                     const LossModel& loss) {
  if (spec.is_finite_class()) {
    if (!loss.is_finite()) throw ContractError("finite-class Hamiltonian requires a finite loss table");
    require_prior_matches(prior, loss);
    return weighted_log_sum_exp(hamiltonian_values(spec, sample, loss), prior.weights());
  }
  require_parametric(loss, "kernel");
  require(prior.is_lebesgue(), "kernel Hamiltonians are defined against Lebesgue measure");
  return parametric_log_partition(spec, sample);
}

Vector canonical_hamiltonians(const HamiltonianSpec& spec, const Sample& sample,
                              const PriorWeights& prior, const LossModel& loss) {
  require(spec.is_finite_class(), "canonical_hamiltonians needs a finite class");
  require_prior_matches(prior, loss);
  const Vector h = hamiltonian_values(spec, sample, loss);
  const double log_z = weighted_log_sum_exp(h, prior.weights());
  Vector out(h.size());
  for (Index i = 0; i < h.size(); ++i)
    out(i) = prior.weights()(i) > 0 ? h(i) - log_z : -std::numeric_limits<double>::infinity();
  return out;
}

double canonical_hamiltonian(const HamiltonianSpec& spec, const Hypothesis& h,
                             const Sample& sample, const PriorWeights& prior,
                             const LossModel& loss) {
  return hamiltonian_value(spec, h, sample, loss) - log_partition(spec, sample, prior, loss);
}

PosteriorDistribution posterior(const HamiltonianSpec& spec, const Sample& sample,
                                const PriorWeights& prior, const LossModel& loss,
                                const McmcOptions& mcmc) {
  if (spec.is_finite_class()) {
    const Vector hq = canonical_hamiltonians(spec, sample, prior, loss);
    Vector w = (hq.array().exp() * prior.weights().array()).matrix();
    w /= w.sum();
    return FiniteWeights{std::move(w)};
  }
  require_parametric(loss, "kernel");
  require(prior.is_lebesgue(), "kernel Hamiltonians are defined against Lebesgue measure");
  if (spec.is_gaussian())
    return GaussianPosterior{(*spec.gaussian_algorithm())(sample), spec.gaussian_sigma()};

  McmcChain chain;
  const AlgorithmPtr alg = first_algorithm(spec);
  chain.initial = alg ? (*alg)(sample) : Vector(Vector::Zero(loss.dim()));
  chain.log_density = [spec, sample, loss](const Vector& h) {
    return hamiltonian_value(spec, Hypothesis{h}, sample, loss);
  };
  chain.proposal_scale = mcmc.proposal_scale.value_or(default_proposal_scale(spec));
  if (!std::isfinite(chain.proposal_scale)) chain.proposal_scale = 0.5;
  chain.burn_in = mcmc.burn_in;
  chain.thinning = mcmc.thinning;
  return chain;
}

Hypothesis sample_posterior(const PosteriorDistribution& dist, RandomStream& rng) {
  return std::visit(
      overloaded{
          [&](const FiniteWeights& f) -> Hypothesis {
            const double u = rng.uniform() * f.weights.sum();
            double acc = 0;
            Index last_positive = 0;
            for (Index h = 0; h < f.weights.size(); ++h) {
              if (f.weights(h) <= 0) continue;
              last_positive = h;
              acc += f.weights(h);
              if (u < acc) return h;
            }
            return last_positive;
          },
          [&](const GaussianPosterior& g) -> Hypothesis {
            return Vector(g.mean + g.sigma * rng.normal_vector(g.mean.size()));
          },
          [&](const McmcChain& c) -> Hypothesis {
            require(c.proposal_scale > 0, "MCMC proposal scale must be positive");
            Vector state = c.initial;
            double log_p = c.log_density(state);
            if (!std::isfinite(log_p))
              throw ContractError("MCMC chain: log density is not finite at the initial state");
            const int steps = c.burn_in + c.thinning;
            for (int s = 0; s < steps; ++s) {
              Vector proposal = state + c.proposal_scale * rng.normal_vector(state.size());
              const double log_q = c.log_density(proposal);
              if (std::log(rng.uniform()) < log_q - log_p) {
                state = std::move(proposal);
                log_p = log_q;
              }
            }
            return state;
          }},
      dist);
}

EstimateRegime bounded_difference_coefficient(const HamiltonianSpec& spec,
                                              const FiniteDataSpace& space, const LossModel& loss,
                                              Index n, CoefficientMode mode, std::uint64_t budget) {
  require(n >= 1, "sample size must be positive");
  if (mode == CoefficientMode::analytic) {
    return std::visit(
        overloaded{
            [&](const GibbsTerm& g) {
              return EstimateRegime{g.beta * loss.bound() / double(n), "analytic", 0.0};
            },
            [&](const GaussianKernelTerm&) -> EstimateRegime {
              throw Unsupported(
                  "gaussian kernel is not a bounded-difference Hamiltonian; use the "
                  "gaussian randomization bounds instead");
            },
            [&](const LipschitzKernelTerm& l) {
              const auto c_a =
                  hypothesis_sensitivity(*l.algorithm, space, n, SensitivityMode::declared, budget);
              return EstimateRegime{l.lip_constant * c_a.value, "analytic(c_A " + c_a.regime + ")",
                                    0.0};
            },
            [&](const CompositeTerm& c) {
              double acc = 0;
              for (const auto& p : c.parts)
                acc += bounded_difference_coefficient(p, space, loss, n, mode, budget).value;
              return EstimateRegime{acc, "analytic", 0.0};
            },
            [&](const ShiftedTerm& s) {
              if (!s.shift_difference)
                throw Unsupported("shift has no declared bounded-difference coefficient");
              const double base =
                  bounded_difference_coefficient(*s.base, space, loss, n, mode, budget).value;
              return EstimateRegime{base + *s.shift_difference, "analytic", 0.0};
            },
            [&](const CustomTerm& c) {
              if (!c.declared_difference)
                throw Unsupported("custom term '" + c.name + "' declares no coefficient");
              return EstimateRegime{*c.declared_difference, "declared", 0.0};
            }},
        spec.variant());
  }

  if (!spec.is_finite_class() || !loss.is_finite())
    throw Unsupported("brute-force coefficient requires a finite hypothesis class");
  const bool exhaustive = sample_space_size(space.size(), n) <= budget;
  double best = 0;
  std::vector<Vector> values(space.size());
  const std::string regime = for_each_base_sample(space, n, budget, [&](const Sample& base) {
    for (Index k = 0; k < n; ++k) {
      if (exhaustive && base[k] != 0) continue;
      for (int y = 0; y < space.size(); ++y)
        values[y] = hamiltonian_values(spec, base.substituted(k, y), loss);
      for (int y = 0; y < space.size(); ++y)
        for (int yp = 0; yp < space.size(); ++yp)
          if (y != yp) best = std::max(best, (values[y] - values[yp]).maxCoeff());
    }
  });
  return {best, regime, 0.0};
}

}  // namespace gencert
