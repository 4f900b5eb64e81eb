#include "gencert/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace gencert {

namespace {

void require_n(long n) { require(n >= 1, "sample size n must be >= 1"); }

void require_finite(double x, const char* name) {
  require(std::isfinite(x), std::string(name) + " must be finite");
}

void require_nonneg(double x, const char* name) {
  require(std::isfinite(x) && x >= 0, std::string(name) + " must be finite and >= 0");
}

double log_inv(double delta) { return std::log(1.0 / delta); }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

double kl_inverse_upper(double p_hat, double B) {
  require(p_hat >= 0 && p_hat <= 1, "kl_inverse_upper: p_hat must lie in [0,1]");
  require(std::isfinite(B) && B >= 0, "kl_inverse_upper: B must be finite and >= 0");
  if (B == 0 || p_hat >= kKlInverseCeiling) return p_hat;
  if (kl_bernoulli(p_hat, kKlInverseCeiling) < B) return 1.0;
  double lo = p_hat;
  double hi = kKlInverseCeiling;
  double mid = hi;
  for (int i = 0; i < kKlInverseIterations; ++i) {
    mid = 0.5 * (lo + hi);
    const double r = kl_bernoulli(p_hat, mid) - B;
    if (std::abs(r) <= kKlInverseTolerance) return mid;
    (r < 0 ? lo : hi) = mid;
    if (std::nextafter(lo, hi) >= hi) break;
  }
  // Bracket collapsed to adjacent doubles: keep the endpoint with the smaller residual.
  return std::abs(kl_bernoulli(p_hat, lo) - B) <= std::abs(kl_bernoulli(p_hat, hi) - B) ? lo : hi;
}

double gap_from_kl(double L_hat, double B) {
  require_nonneg(L_hat, "L_hat");
  require_nonneg(B, "B");
  return std::sqrt(2.0 * L_hat * B) + 2.0 * B;
}

double inversion_lemma(double L_hat, double A) {
  require_nonneg(L_hat, "L_hat");
  require_nonneg(A, "A");
  return L_hat + 2.0 * std::sqrt(L_hat * A) + 5.0 * A;
}

std::string to_string(Scope scope) {
  return scope == Scope::joint_draw ? "joint_draw" : "posterior_expectation";
}

Scope scope_from_string(const std::string& s) {
  if (s == "joint_draw") return Scope::joint_draw;
  if (s == "posterior_expectation") return Scope::posterior_expectation;
  throw ContractError("unknown certificate scope '" + s + "'");
}

const std::vector<std::string>& certificate_methods() {
  static const std::vector<std::string> all = {
      method::kBoundedDifferences,    method::kBernstein,
      method::kEmpiricalBernstein,    method::kSubgaussianSup,
      method::kSubgaussianLocal,      method::kGaussianMgf,
      method::kGaussianKlExpectation, method::kGaussianGapJoint,
      method::kGaussianGapBernstein,  method::kPacBayesTransfer,
      method::kPacBayesGaussianKl,    method::kModelSelectionGap,
      method::kModelSelectionVariance};
  return all;
}

double Certificate::input(const std::string& key) const {
  for (const auto& [k, v] : inputs)
    if (k == key) return v;
  throw ContractError("certificate '" + method + "' has no input '" + key + "'");
}

bool Certificate::has_input(const std::string& key) const {
  for (const auto& [k, _] : inputs)
    if (k == key) return true;
  return false;
}

Certificate bound_bounded_differences(double b, double c, long n, double delta) {
  require(b > 0, "b must be > 0");
  require_nonneg(c, "c");
  require_n(n);
  require_delta(delta);
  Certificate out{method::kBoundedDifferences, 0, delta, Scope::joint_draw,
                  {{"b", b}, {"c", c}, {"n", double(n)}}, ""};
  out.value = b * (c + std::sqrt(log_inv(delta) / (2.0 * double(n))));
  return out;
}

double bound_mgf_bounded_differences(double b, double c, long n, double lambda) {
  require(b > 0, "b must be > 0");
  require_nonneg(c, "c");
  require_n(n);
  require(std::isfinite(lambda) && lambda >= 0, "lambda must be >= 0");
  const double t = lambda * b / double(n) + 2.0 * c;
  return double(n) / 8.0 * t * t;
}

Certificate bound_bernstein(double v, double b, double c, long n, double delta) {
  require_nonneg(v, "v");
  require(b > 0, "b must be > 0");
  require_nonneg(c, "c");
  require_n(n);
  require_delta(delta);
  const double k = c * c + log_inv(delta) / double(n);
  Certificate out{method::kBernstein, 0, delta, Scope::joint_draw,
                  {{"v", v}, {"b", b}, {"c", c}, {"n", double(n)}}, ""};
  out.value = 2.0 * std::sqrt(v * k) + b * k;
  return out;
}

Certificate bound_empirical_bernstein(double L_hat, double b, double c, long n, double delta) {
  require(b > 0, "b must be > 0");
  require(L_hat >= 0 && L_hat <= b, "L_hat must lie in [0, b]");
  require_nonneg(c, "c");
  require_n(n);
  require_delta(delta);
  const double k = c * c + log_inv(delta) / double(n);
  Certificate out{method::kEmpiricalBernstein, 0, delta, Scope::joint_draw,
                  {{"L_hat", L_hat}, {"b", b}, {"c", c}, {"n", double(n)}}, ""};
  out.value = 2.0 * std::sqrt(L_hat * b * k) + 5.0 * b * k;
  return out;
}

std::pair<Certificate, Certificate> bound_subgaussian(double rho_sup, double rho_h, double sigma,
                                                      long n, double delta) {
  require(rho_sup > 0 && std::isfinite(rho_sup), "rho_sup must be > 0");
  require(rho_h > 0 && rho_h <= rho_sup, "rho_h must lie in (0, rho_sup]");
  require_nonneg(sigma, "sigma");
  require_n(n);
  require_delta(delta);
  const double l = log_inv(delta);
  const std::vector<std::pair<std::string, double>> in = {
      {"rho_sup", rho_sup}, {"rho_h", rho_h}, {"sigma", sigma}, {"n", double(n)}};
  Certificate sup{method::kSubgaussianSup, 0, delta, Scope::joint_draw, in, ""};
  sup.value = rho_sup * (2.0 * sigma + std::sqrt(2.0 * l / double(n)));
  Certificate local{method::kSubgaussianLocal, 0, delta, Scope::joint_draw, in, ""};
  local.value = rho_h * (std::sqrt(32.0) * sigma + std::sqrt(4.0 * l / double(n)));
  return {sup, local};
}

void require_gaussian_stability(const GaussianInputs& g, long n, bool need_n_gt_8) {
  require_nonneg(g.V, "V");
  require(g.sigma > 0 && std::isfinite(g.sigma), "sigma must be > 0");
  require_nonneg(g.c_A, "c_A");
  require_n(n);
  const double lhs = 12.0 * double(n) * g.c_A * g.c_A;
  if (!(lhs <= g.sigma * g.sigma)) {
    std::ostringstream os;
    os << "stability precondition 12*n*c_A^2 <= sigma^2 violated: 12*" << n << "*" << g.c_A
       << "^2 = " << lhs << " > " << g.sigma * g.sigma;
    throw PreconditionViolated(os.str());
  }
  if (need_n_gt_8 && n <= 8)
    throw PreconditionViolated("precondition n > 8 violated: n = " + std::to_string(n));
}

namespace {

std::vector<std::pair<std::string, double>> gaussian_inputs(const GaussianInputs& g, long n) {
  std::vector<std::pair<std::string, double>> in = {
      {"V", g.V}, {"sigma", g.sigma}, {"c_A", g.c_A}, {"n", double(n)}};
  if (g.v_h) in.emplace_back("v_h", *g.v_h);
  return in;
}

}  // namespace

Certificate bound_gaussian_randomization(const GaussianInputs& g, long n, double delta,
                                         GaussianVariant variant) {
  require_delta(delta);
  const bool need_n = variant == GaussianVariant::mgf || variant == GaussianVariant::kl_expectation;
  require_gaussian_stability(g, n, need_n);
  const double nn = double(n);
  const double s2 = g.sigma * g.sigma;
  const double l = log_inv(delta);
  Certificate out;
  out.delta = delta;
  out.inputs = gaussian_inputs(g, n);
  switch (variant) {
    case GaussianVariant::mgf:
      out.method = method::kGaussianMgf;
      out.scope = Scope::posterior_expectation;
      out.value = 3.0 / s2 * g.V + 0.5 * std::log(2.0 * std::sqrt(nn));
      out.notes = "bound on ln E_X E_{h~Q_X} exp((n/2) kl(L_hat, L)); delta unused";
      break;
    case GaussianVariant::kl_expectation:
      out.method = method::kGaussianKlExpectation;
      out.scope = Scope::posterior_expectation;
      out.value = (6.0 / s2 * g.V + std::log(2.0 * std::sqrt(nn)) + 2.0 * l) / nn;
      out.notes = "bound on E_{h~Q_X} kl(L_hat, L)";
      break;
    case GaussianVariant::gap_joint:
      out.method = method::kGaussianGapJoint;
      out.scope = Scope::joint_draw;
      out.value = std::sqrt((3.0 / s2 * g.V + l) / nn);
      break;
    case GaussianVariant::gap_bernstein: {
      require(g.v_h.has_value(), "gaussian_gap_bernstein needs v(h)");
      require_nonneg(*g.v_h, "v_h");
      out.method = method::kGaussianGapBernstein;
      out.scope = Scope::joint_draw;
      const double k = (3.0 / s2 * g.V + l) / nn;
      out.value = 2.0 * std::sqrt(*g.v_h * k) + k;
      break;
    }
  }
  return out;
}

Certificate pac_bayes_transfer(double kl_PQ, double log_moment, double delta) {
  require_nonneg(kl_PQ, "kl_PQ");
  require_finite(log_moment, "log_moment");
  require_delta(delta);
  Certificate out{method::kPacBayesTransfer, 0, delta, Scope::posterior_expectation,
                  {{"kl_PQ", kl_PQ}, {"log_moment", log_moment}}, "bound on E_{h~P} F(h, X)"};
  out.value = kl_PQ + log_moment + log_inv(delta);
  return out;
}

Certificate pac_bayes_gaussian_kl(double kl_PQ, const GaussianInputs& g, long n, double delta) {
  require_nonneg(kl_PQ, "kl_PQ");
  require_delta(delta);
  require_gaussian_stability(g, n, true);
  const double nn = double(n);
  Certificate out{method::kPacBayesGaussianKl, 0, delta, Scope::posterior_expectation, {}, ""};
  out.inputs = {{"kl_PQ", kl_PQ}};
  for (auto& p : gaussian_inputs(g, n)) out.inputs.push_back(p);
  out.value = (2.0 * kl_PQ + 6.0 / (g.sigma * g.sigma) * g.V + std::log(2.0 * std::sqrt(nn)) +
               2.0 * log_inv(delta)) /
              nn;
  out.notes = "bound on E_{h~P} kl(L_hat, L)";
  return out;
}

Certificate pac_bayes_model_selection(double kl_PQ, const GaussianInputs& g, long n, double delta,
                                      ModelSelectionVariant variant,
                                      std::optional<double> expected_variance) {
  require_nonneg(kl_PQ, "kl_PQ");
  require_delta(delta);
  require_gaussian_stability(g, n, false);
  const double nn = double(n);
  const double stab = 3.0 / (g.sigma * g.sigma) * g.V;
  Certificate out{"", 0, delta, Scope::posterior_expectation, {{"kl_PQ", kl_PQ}}, ""};
  for (auto& p : gaussian_inputs(g, n)) out.inputs.push_back(p);
  if (variant == ModelSelectionVariant::gap) {
    out.method = method::kModelSelectionGap;
    const double kl_used = std::max(kl_PQ, kModelSelectionKlFloor);
    out.value = std::sqrt((stab + 2.0 * kl_PQ + std::log(2.0 * kl_used / delta)) / nn);
    out.notes = "bound on E_{h~P} gap; KL floored at 0.5 inside the logarithm";
    return out;
  }
  require(expected_variance.has_value(), "model_selection_variance needs E_P v(h)");
  require_nonneg(*expected_variance, "E_P v");
  const double ev = *expected_variance;
  out.method = method::kModelSelectionVariance;
  out.inputs.emplace_back("E_P_v", ev);
  const double C =
      2.0 * kl_PQ + 1.0 + std::log(2.0 * (kl_PQ + 1.0) * 2.0 * (nn * ev + 1.0) / delta);
  const double k = (stab + C) / nn;
  out.value = 2.0 * std::sqrt((2.0 * ev + 1.0 / nn) * k) + k;
  out.notes = "bound on E_{h~P} gap";
  return out;
}

BaselineSet baselines(double beta, long n, double delta, std::optional<GaussianBaselineInputs> gauss) {
  require_nonneg(beta, "beta");
  require_n(n);
  require_delta(delta);
  const double nn = double(n);
  BaselineSet out;
  out.gibbs =
      4.0 * beta / nn + (2.0 + std::log((1.0 + std::sqrt(std::exp(1.0))) / delta)) / std::sqrt(nn);
  out.kl_gibbs = 2.0 * beta * beta / (nn * nn) +
                            std::sqrt(2.0 * std::log(3.0)) * beta / std::pow(nn, 1.5) +
                            std::log(4.0 * std::sqrt(nn) / delta) / nn;
  if (gauss) {
    require_nonneg(gauss->c_A, "c_A");
    require(gauss->sigma > 0, "sigma must be > 0");
    const double t = 1.0 + std::sqrt(0.5 * log_inv(delta));
    out.gaussian =
        (nn * gauss->c_A * gauss->c_A / (2.0 * gauss->sigma * gauss->sigma) * t * t +
         std::log(2.0 * std::sqrt(nn) / delta)) /
        nn;
  }
  return out;
}

Certificate gibbs_gap_bound(double beta, long n, double delta) {
  require_nonneg(beta, "beta");
  require_n(n);
  return bound_bounded_differences(1.0, beta / double(n), n, delta);
}

Certificate gibbs_empirical_bernstein(double L_hat, double beta, long n, double delta) {
  require_nonneg(beta, "beta");
  require_n(n);
  return bound_empirical_bernstein(L_hat, 1.0, beta / double(n), n, delta);
}

double gibbs_kl_baseline_gap(double L_hat, double beta, long n, double delta) {
  return gap_from_kl(L_hat, baselines(beta, n, delta).kl_gibbs);
}

Certificate recompute(const Certificate& cert) {
  const auto in = [&](const char* k) { return cert.input(k); };
  const auto n = [&] { return static_cast<long>(cert.input("n")); };
  const auto gauss = [&] {
    GaussianInputs g{in("V"), in("sigma"), in("c_A"), std::nullopt};
    if (cert.has_input("v_h")) g.v_h = in("v_h");
    return g;
  };
  const std::string& m = cert.method;
  if (m == method::kBoundedDifferences) return bound_bounded_differences(in("b"), in("c"), n(), cert.delta);
  if (m == method::kBernstein) return bound_bernstein(in("v"), in("b"), in("c"), n(), cert.delta);
  if (m == method::kEmpiricalBernstein)
    return bound_empirical_bernstein(in("L_hat"), in("b"), in("c"), n(), cert.delta);
  if (m == method::kSubgaussianSup)
    return bound_subgaussian(in("rho_sup"), in("rho_h"), in("sigma"), n(), cert.delta).first;
  if (m == method::kSubgaussianLocal)
    return bound_subgaussian(in("rho_sup"), in("rho_h"), in("sigma"), n(), cert.delta).second;
  if (m == method::kGaussianMgf)
    return bound_gaussian_randomization(gauss(), n(), cert.delta, GaussianVariant::mgf);
  if (m == method::kGaussianKlExpectation)
    return bound_gaussian_randomization(gauss(), n(), cert.delta, GaussianVariant::kl_expectation);
  if (m == method::kGaussianGapJoint)
    return bound_gaussian_randomization(gauss(), n(), cert.delta, GaussianVariant::gap_joint);
  if (m == method::kGaussianGapBernstein)
    return bound_gaussian_randomization(gauss(), n(), cert.delta, GaussianVariant::gap_bernstein);
  if (m == method::kPacBayesTransfer)
    return pac_bayes_transfer(in("kl_PQ"), in("log_moment"), cert.delta);
  if (m == method::kPacBayesGaussianKl) return pac_bayes_gaussian_kl(in("kl_PQ"), gauss(), n(), cert.delta);
  if (m == method::kModelSelectionGap)
    return pac_bayes_model_selection(in("kl_PQ"), gauss(), n(), cert.delta, ModelSelectionVariant::gap);
  if (m == method::kModelSelectionVariance)
    return pac_bayes_model_selection(in("kl_PQ"), gauss(), n(), cert.delta,
                                     ModelSelectionVariant::variance, in("E_P_v"));
  throw ContractError("unknown certificate method '" + m + "'");
}

std::string to_line(const Certificate& cert) {
  std::ostringstream os;
  os << cert.method << ' ' << format_double(cert.value) << ' ' << format_double(cert.delta) << ' '
     << to_string(cert.scope);
  for (const auto& [k, v] : cert.inputs) os << ' ' << k << '=' << format_double(v);
  if (!cert.notes.empty()) os << " # " << cert.notes;
  return os.str();
}

Certificate parse_line(const std::string& line) {
  std::string body = line;
  Certificate out;
  if (const auto hash = line.find(" # "); hash != std::string::npos) {
    body = line.substr(0, hash);
    out.notes = line.substr(hash + 3);
  }
  std::istringstream is(body);
  std::string value, delta, scope;
  if (!(is >> out.method >> value >> delta >> scope))
    throw ContractError("certificate line needs method, value, delta and scope");
  const auto& known = certificate_methods();
  if (std::find(known.begin(), known.end(), out.method) == known.end())
    throw ContractError("unknown certificate method '" + out.method + "'");
  try {
    out.value = std::stod(value);
    out.delta = std::stod(delta);
    out.scope = scope_from_string(scope);
    std::string kv;
    while (is >> kv) {
      const auto eq = kv.find('=');
      require(eq != std::string::npos && eq > 0, "malformed input pair '" + kv + "'");
      out.inputs.emplace_back(kv.substr(0, eq), std::stod(kv.substr(eq + 1)));
    }
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ContractError*>(&e)) throw;
    throw ContractError("malformed number in certificate line: " + line);
  }
  return out;
}

nlohmann::json to_json(const Certificate& cert) {
  nlohmann::json j;
  j["method"] = cert.method;
  j["value"] = cert.value;
  j["delta"] = cert.delta;
  j["scope"] = to_string(cert.scope);
  j["inputs"] = nlohmann::json::array();
  for (const auto& [k, v] : cert.inputs) j["inputs"].push_back({{"name", k}, {"value", v}});
  j["notes"] = cert.notes;
  return j;
}

Certificate certificate_from_json(const nlohmann::json& j) {
  Certificate out;
  try {
    out.method = j.at("method").get<std::string>();
    out.value = j.at("value").get<double>();
    out.delta = j.at("delta").get<double>();
    out.scope = scope_from_string(j.at("scope").get<std::string>());
    for (const auto& p : j.at("inputs"))
      out.inputs.emplace_back(p.at("name").get<std::string>(), p.at("value").get<double>());
    if (j.contains("notes")) out.notes = j.at("notes").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("malformed certificate JSON: ") + e.what());
  }
  return out;
}

double lambda_objective(const LambdaProblem& p, double lambda) {
  const double nn = double(p.n);
  switch (p.objective) {
    case LambdaObjective::bounded_differences:
      return (bound_mgf_bounded_differences(p.b, p.c, p.n, lambda) + log_inv(p.delta)) / lambda;
    case LambdaObjective::gaussian_gap:
      return lambda / (4.0 * nn) + p.K / lambda;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

LambdaOptimum optimize_lambda_numeric(const LambdaProblem& p) {
  require_n(p.n);
  require(p.b > 0, "b must be > 0");
  require_delta(p.delta);
  require_nonneg(p.c, "c");
  require_nonneg(p.K, "K");
  const double scale = std::sqrt(double(p.n)) / p.b;
  const double lo0 = std::log(scale) - 10.0 * std::log(10.0);
  const double hi0 = std::log(scale) + 10.0 * std::log(10.0);
  const auto f = [&](double t) {
    const double v = lambda_objective(p, std::exp(t));
    if (!std::isfinite(v)) throw ContractError("lambda objective is not finite");
    return v;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo0, b = hi0;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  // Bracket width in ln λ is the relative tolerance on λ.
  while (b - a > kLambdaRelativeTolerance) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  LambdaOptimum out;
  const double t = 0.5 * (a + b);
  out.lambda_star = std::exp(t);
  out.value = f(t);
  const double edge = 1e-6 * (hi0 - lo0);
  if (t - lo0 < edge) out.boundary = LambdaBoundary::lower;
  else if (hi0 - t < edge) out.boundary = LambdaBoundary::upper;
  return out;
}

}  // namespace gencert
