#include "gencert/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace gencert {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

/// Collects errors while reading one JSON object.
class Reader {
 public:
  Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
      error(where, "must be an object");
      return;
    }
    for (const auto& [k, _] : obj.items())
      if (!allowed.count(k)) error(where.empty() ? k : where + "." + k, "unknown key");
  }

  template <class T>
  std::optional<T> get(const json& obj, const std::string& key, const std::string& where);

  void error(const std::string& field, const std::string& msg) {
    errors_.push_back("field '" + field + "': " + msg);
  }

 private:
  std::vector<std::string>& errors_;
};

std::string path_of(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

template <>
std::optional<double> Reader::get<double>(const json& obj, const std::string& key,
                                          const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    error(path_of(where, key), "must be a number");
    return std::nullopt;
  }
  return v.get<double>();
}

template <>
std::optional<long> Reader::get<long>(const json& obj, const std::string& key,
                                      const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    error(path_of(where, key), "must be an integer");
    return std::nullopt;
  }
  return v.get<long>();
}

template <>
std::optional<std::uint64_t> Reader::get<std::uint64_t>(const json& obj, const std::string& key,
                                                        const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    error(path_of(where, key), "must be a non-negative integer");
    return std::nullopt;
  }
  return v.get<std::uint64_t>();
}

template <>
std::optional<std::string> Reader::get<std::string>(const json& obj, const std::string& key,
                                                    const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    error(path_of(where, key), "must be a string");
    return std::nullopt;
  }
  return v.get<std::string>();
}

/// A number or an array of numbers.
std::optional<std::vector<double>> get_number_list(Reader& r, const json& obj, const std::string& key,
                                                   const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array() && !v.empty()) {
    for (const auto& e : v) {
      if (!e.is_number()) {
        r.error(path_of(where, key), "must be a number or a nonempty array of numbers");
        return std::nullopt;
      }
      out.push_back(e.get<double>());
    }
  } else {
    r.error(path_of(where, key), "must be a number or a nonempty array of numbers");
    return std::nullopt;
  }
  return out;
}

std::optional<std::vector<long>> get_int_list(Reader& r, const json& obj, const std::string& key,
                                              const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  std::vector<long> out;
  const auto bad = [&] {
    r.error(path_of(where, key), "must be an integer or a nonempty array of integers");
    return std::nullopt;
  };
  if (v.is_number_integer()) {
    out.push_back(v.get<long>());
  } else if (v.is_array() && !v.empty()) {
    for (const auto& e : v) {
      if (!e.is_number_integer()) return bad();
      out.push_back(e.get<long>());
    }
  } else {
    return bad();
  }
  return out;
}

std::optional<std::vector<std::string>> get_string_list(Reader& r, const json& obj,
                                                        const std::string& key,
                                                        const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  std::vector<std::string> out;
  if (!v.is_array()) {
    r.error(path_of(where, key), "must be an array of strings");
    return std::nullopt;
  }
  for (const auto& e : v) {
    if (!e.is_string()) {
      r.error(path_of(where, key), "must be an array of strings");
      return std::nullopt;
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::optional<TightnessGrid> parse_compare(Reader& r, const json& obj) {
  const std::string where = "compare";
  r.check_keys(obj, where, {"ns", "betas", "deltas", "kl_points"});
  if (!obj.is_object()) return std::nullopt;
  TightnessGrid g;
  if (auto v = get_int_list(r, obj, "ns", where)) {
    g.ns = *v;
    for (long n : g.ns)
      if (n < 1) r.error("compare.ns", "entries must be >= 1");
  }
  if (obj.contains("betas")) {
    const json& b = obj.at("betas");
    g.betas.clear();
    if (!b.is_array() || b.empty()) {
      r.error("compare.betas", "must be a nonempty array of numbers or rules");
    } else {
      for (const auto& e : b) {
        std::string rule;
        if (e.is_number()) {
          std::ostringstream os;
          os.precision(17);
          os << e.get<double>();
          rule = os.str();
        } else if (e.is_string()) {
          rule = e.get<std::string>();
        }
        try {
          if (resolve_beta(rule, 1) < 0) r.error("compare.betas", "beta must be >= 0");
          g.betas.push_back(rule);
        } catch (const ContractError&) {
          r.error("compare.betas", "unrecognized beta rule '" + rule + "' (use a number, \"sqrt(n)\", \"n/10\" or \"n\")");
        }
      }
    }
  }
  if (auto v = get_number_list(r, obj, "deltas", where)) {
    g.deltas = *v;
    for (double d : g.deltas)
      if (!(d > 0 && d < 1)) r.error("compare.deltas", "entries must lie in (0,1)");
  }
  if (obj.contains("kl_points")) {
    const json& pts = obj.at("kl_points");
    g.kl_points.clear();
    if (!pts.is_array()) {
      r.error("compare.kl_points", "must be an array of objects");
    } else {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string w = "compare.kl_points[" + std::to_string(i) + "]";
        r.check_keys(pts[i], w, {"n", "beta", "delta", "L_hat"});
        KlChainPoint p;
        if (auto n = r.get<long>(pts[i], "n", w)) p.n = *n;
        if (auto b = r.get<double>(pts[i], "beta", w)) p.beta = *b;
        if (auto d = r.get<double>(pts[i], "delta", w)) p.delta = *d;
        if (auto l = get_number_list(r, pts[i], "L_hat", w)) p.L_hat = *l;
        if (p.n < 1) r.error(w + ".n", "must be >= 1");
        if (p.beta < 0) r.error(w + ".beta", "must be >= 0");
        if (!(p.delta > 0 && p.delta < 1)) r.error(w + ".delta", "must lie in (0,1)");
        for (double l : p.L_hat)
          if (!(l >= 0 && l <= 1)) r.error(w + ".L_hat", "entries must lie in [0,1]");
        g.kl_points.push_back(p);
      }
    }
  }
  return g;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("invalid configuration:\n  " + join(errors, "\n  ")),
      errors_(std::move(errors)) {}

ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config_text(buf.str(), parent.empty() ? "." : parent.string());
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  std::vector<std::string> errors;
  Reader r(errors);
  ScenarioConfig c;
  c.base_dir = base_dir;
  r.check_keys(root, "",
               {"id", "instance", "hamiltonian", "n", "delta", "methods", "trials",
                "posterior_trials", "posterior_draws", "master_seed", "enumeration_budget",
                "oracles", "phases", "compare", "output"});
  if (!root.is_object()) throw ConfigError(errors);

  if (auto v = r.get<std::string>(root, "id", "")) c.id = *v;
  if (c.id.empty() || !std::all_of(c.id.begin(), c.id.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
      }))
    r.error("id", "must be a nonempty string of letters, digits, '_', '-' or '.'");

  if (!root.contains("instance")) {
    r.error("instance", "is required");
  } else {
    const json& in = root.at("instance");
    r.check_keys(in, "instance", {"kind", "path", "seed", "points", "hypotheses", "dim"});
    if (auto v = r.get<std::string>(in, "kind", "instance")) c.instance.kind = *v;
    if (auto v = r.get<std::string>(in, "path", "instance")) c.instance.path = *v;
    if (auto v = r.get<std::uint64_t>(in, "seed", "instance")) c.instance.seed = *v;
    if (auto v = r.get<long>(in, "points", "instance")) c.instance.points = *v;
    if (auto v = r.get<long>(in, "hypotheses", "instance")) c.instance.hypotheses = *v;
    if (auto v = r.get<long>(in, "dim", "instance")) c.instance.dim = *v;
    const auto& k = c.instance.kind;
    if (k == "table") {
      if (c.instance.path.empty()) {
        r.error("instance.path", "is required for kind \"table\"");
      } else {
        const auto p = std::filesystem::path(base_dir) / c.instance.path;
        if (!std::filesystem::exists(p)) r.error("instance.path", "file '" + p.string() + "' does not exist");
      }
    } else if (k == "random_table") {
      if (c.instance.points < 1) r.error("instance.points", "must be >= 1");
      if (c.instance.hypotheses < 1) r.error("instance.hypotheses", "must be >= 1");
    } else if (k == "random_embedding") {
      if (c.instance.points < 2) r.error("instance.points", "must be >= 2");
      if (c.instance.dim < 1) r.error("instance.dim", "must be >= 1");
    } else {
      r.error("instance.kind", "must be \"table\", \"random_table\" or \"random_embedding\"");
    }
  }

  if (root.contains("hamiltonian")) {
    const json& h = root.at("hamiltonian");
    r.check_keys(h, "hamiltonian", {"kind", "beta", "sigma", "algorithm", "ridge_lambda"});
    if (auto v = r.get<std::string>(h, "kind", "hamiltonian")) c.hamiltonian.kind = *v;
    if (auto v = get_number_list(r, h, "beta", "hamiltonian")) c.hamiltonian.betas = *v;
    if (auto v = r.get<double>(h, "sigma", "hamiltonian")) c.hamiltonian.sigma = *v;
    if (auto v = r.get<std::string>(h, "algorithm", "hamiltonian")) c.hamiltonian.algorithm = *v;
    if (auto v = r.get<double>(h, "ridge_lambda", "hamiltonian")) c.hamiltonian.ridge_lambda = *v;
    if (c.hamiltonian.kind == "gibbs") {
      for (double b : c.hamiltonian.betas)
        if (!(b >= 0 && std::isfinite(b))) r.error("hamiltonian.beta", "must be >= 0");
      if (h.is_object() && h.contains("sigma")) r.error("hamiltonian.sigma", "only applies to kind \"gaussian\"");
    } else if (c.hamiltonian.kind == "gaussian") {
      if (h.is_object() && h.contains("beta")) r.error("hamiltonian.beta", "only applies to kind \"gibbs\"");
      if (c.hamiltonian.sigma && !(*c.hamiltonian.sigma > 0))
        r.error("hamiltonian.sigma", "must be > 0");
      if (!AlgorithmRegistry::with_builtins().contains(c.hamiltonian.algorithm))
        r.error("hamiltonian.algorithm",
                "unknown algorithm '" + c.hamiltonian.algorithm + "' (known: " +
                    join(AlgorithmRegistry::with_builtins().names(), ", ") + ")");
      if (!(c.hamiltonian.ridge_lambda > 0)) r.error("hamiltonian.ridge_lambda", "must be > 0");
    } else {
      r.error("hamiltonian.kind", "must be \"gibbs\" or \"gaussian\"");
    }
  }

  if (auto v = get_int_list(r, root, "n", "")) c.ns = *v;
  for (long n : c.ns)
    if (n < 1) r.error("n", "must be >= 1");
  if (auto v = r.get<double>(root, "delta", "")) c.delta = *v;
  if (!(c.delta > 0 && c.delta < 1)) r.error("delta", "must lie in the open interval (0,1)");
  if (auto v = r.get<long>(root, "trials", "")) c.trials = *v;
  if (c.trials < 1) r.error("trials", "must be >= 1");
  if (auto v = r.get<long>(root, "posterior_trials", "")) c.posterior_trials = *v;
  if (c.posterior_trials < 1) r.error("posterior_trials", "must be >= 1");
  if (auto v = r.get<long>(root, "posterior_draws", "")) c.posterior_draws = *v;
  if (c.posterior_draws < 1) r.error("posterior_draws", "must be >= 1");
  if (auto v = r.get<std::uint64_t>(root, "master_seed", "")) c.master_seed = *v;
  if (auto v = r.get<std::uint64_t>(root, "enumeration_budget", "")) c.enumeration_budget = *v;
  if (c.enumeration_budget < 1) r.error("enumeration_budget", "must be >= 1");
  if (root.contains("oracles")) {
    if (root.at("oracles").is_boolean()) c.oracles = root.at("oracles").get<bool>();
    else r.error("oracles", "must be true or false");
  }
  if (c.oracles && c.hamiltonian.kind != "gibbs")
    r.error("oracles", "exact oracles need a finite-class (gibbs) Hamiltonian");

  if (auto v = get_string_list(r, root, "phases", "")) {
    c.phases = *v;
    for (const auto& p : c.phases)
      if (p != "certify" && p != "verify" && p != "compare")
        r.error("phases", "unknown phase '" + p + "' (use certify, verify, compare)");
  }

  const bool finite_instance = c.instance.kind == "table" || c.instance.kind == "random_table";
  if (c.hamiltonian.kind == "gaussian" && finite_instance)
    r.error("hamiltonian.kind", "gaussian kernel needs a \"random_embedding\" instance, got \"" +
                                    c.instance.kind + "\"");
  if (c.hamiltonian.kind == "gibbs" && c.instance.kind == "random_embedding")
    r.error("hamiltonian.kind", "Gibbs Hamiltonian needs a finite loss-table instance");

  const HamiltonianSpec probe =
      c.hamiltonian.kind == "gaussian"
          ? HamiltonianSpec::gaussian(1.0, std::make_shared<const StableAlgorithm>(constant_algorithm(1)))
          : HamiltonianSpec::gibbs(0.0);
  const auto allowed = testable_methods(probe);
  if (auto v = get_string_list(r, root, "methods", "")) c.methods = *v;
  if (c.methods.empty()) c.methods = allowed;
  for (const auto& m : c.methods) {
    const auto& all = certificate_methods();
    if (std::find(all.begin(), all.end(), m) == all.end()) {
      r.error("methods", "unknown method '" + m + "'");
    } else if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
      r.error("methods", "method '" + m + "' is incompatible with a " + c.hamiltonian.kind +
                             " Hamiltonian on a " + c.instance.kind + " instance");
    }
  }

  if (root.contains("compare")) c.compare = parse_compare(r, root.at("compare"));

  if (root.contains("output")) {
    const json& o = root.at("output");
    r.check_keys(o, "output", {"dir", "csv", "summary", "report", "certificates", "plot"});
    if (auto v = r.get<std::string>(o, "dir", "output")) c.output.dir = *v;
    if (auto v = r.get<std::string>(o, "csv", "output")) c.output.csv = *v;
    if (auto v = r.get<std::string>(o, "summary", "output")) c.output.summary = *v;
    if (auto v = r.get<std::string>(o, "report", "output")) c.output.report = *v;
    if (auto v = r.get<std::string>(o, "certificates", "output")) c.output.certificates = *v;
    if (auto v = r.get<std::string>(o, "plot", "output")) c.output.plot = *v;
  }

  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

LossTableFile parse_loss_table(const std::string& text) {
  std::vector<std::string> errors;
  std::vector<std::string> points;
  std::vector<double> mu;
  std::optional<double> b;
  std::optional<std::vector<double>> prior;
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto numbers = [&](std::istringstream& is, std::vector<double>& out) {
    std::string tok;
    while (is >> tok) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        errors.push_back("line " + std::to_string(lineno) + ": '" + tok + "' is not a number");
      }
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream is(line);
    std::string key;
    if (!(is >> key)) continue;
    if (key == "points") {
      std::string p;
      while (is >> p) points.push_back(p);
    } else if (key == "mu") {
      numbers(is, mu);
    } else if (key == "b") {
      std::vector<double> v;
      numbers(is, v);
      if (v.size() != 1) errors.push_back("line " + std::to_string(lineno) + ": 'b' takes one value");
      else b = v[0];
    } else if (key == "prior") {
      prior.emplace();
      numbers(is, *prior);
    } else if (key == "loss") {
      std::string name;
      if (!(is >> name)) {
        errors.push_back("line " + std::to_string(lineno) + ": 'loss' needs a hypothesis name");
        continue;
      }
      names.push_back(name);
      rows.emplace_back();
      numbers(is, rows.back());
    } else {
      errors.push_back("line " + std::to_string(lineno) + ": unknown keyword '" + key + "'");
    }
  }
  if (points.empty()) errors.push_back("missing 'points' line");
  if (mu.size() != points.size()) errors.push_back("'mu' must have one value per point");
  if (rows.empty()) errors.push_back("no 'loss' lines");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].size() != points.size())
      errors.push_back("loss row '" + names[i] + "' must have one value per point");
  if (prior && prior->size() != rows.size()) errors.push_back("'prior' must have one weight per hypothesis");
  if (!errors.empty()) throw ConfigError(errors);

  try {
    Matrix values(rows.size(), points.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < points.size(); ++j) values(i, j) = rows[i][j];
    const double bound = b.value_or(1.0);
    LossTableFile f{FiniteDataSpace(points, Eigen::Map<const Vector>(mu.data(), mu.size())),
                    FiniteTable{values, bound}, names, std::nullopt};
    LossModel check(f.table);  // validates entries against b
    if (prior) {
      f.prior = Eigen::Map<const Vector>(prior->data(), prior->size());
      PriorWeights validate(*f.prior);
    }
    return f;
  } catch (const ContractError& e) {
    throw ConfigError({std::string("loss table: ") + e.what()});
  }
}

LossTableFile read_loss_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read loss table '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_loss_table(buf.str());
}

std::string format_loss_table(const LossTableFile& file) {
  std::ostringstream os;
  os.precision(17);
  os << "points";
  for (const auto& p : file.space.points()) os << ' ' << p;
  os << "\nmu";
  for (Index i = 0; i < file.space.size(); ++i) os << ' ' << file.space.prob(i);
  os << "\nb " << file.table.bound_b << '\n';
  if (file.prior) {
    os << "prior";
    for (Index i = 0; i < file.prior->size(); ++i) os << ' ' << (*file.prior)(i);
    os << '\n';
  }
  for (Index h = 0; h < file.table.values.rows(); ++h) {
    os << "loss " << file.hypotheses[h];
    for (Index x = 0; x < file.table.values.cols(); ++x) os << ' ' << file.table.values(h, x);
    os << '\n';
  }
  return os.str();
}

Instance build_instance(const ScenarioConfig& config) {
  const auto& ic = config.instance;
  if (ic.kind == "table") {
    LossTableFile f = read_loss_table((std::filesystem::path(config.base_dir) / ic.path).string());
    const Index m = f.table.values.rows();
    PriorWeights prior = f.prior ? PriorWeights(*f.prior) : PriorWeights::uniform(m);
    return Instance{f.space, LossModel(f.table), prior, Matrix()};
  }
  RandomStream rng(ic.seed);
  if (ic.kind == "random_table") return random_finite_instance(rng, ic.points, ic.hypotheses);
  if (ic.kind == "random_embedding") return random_embedding_instance(rng, ic.points, ic.dim);
  throw ConfigError({"field 'instance.kind': unsupported kind '" + ic.kind + "'"});
}

HamiltonianSpec build_hamiltonian(const ScenarioConfig& config, const Instance& instance, long n,
                                  double beta) {
  const auto& hc = config.hamiltonian;
  if (hc.kind == "gibbs") return HamiltonianSpec::gibbs(beta);
  AlgorithmSetup setup;
  setup.features = instance.features;
  setup.n = n;
  setup.ridge_lambda = hc.ridge_lambda;
  // Ridge targets: the first feature coordinate.
  setup.targets = instance.features.row(0).transpose();
  auto alg = std::make_shared<const StableAlgorithm>(
      AlgorithmRegistry::with_builtins().create(hc.algorithm, setup));
  double sigma;
  if (hc.sigma) {
    sigma = *hc.sigma;
  } else {
    const double c_a = hypothesis_sensitivity(*alg, instance.space, n, SensitivityMode::declared,
                                              config.enumeration_budget)
                           .value;
    sigma = std::sqrt(12.0 * double(n)) * c_a * (1.0 + 1e-9);
    if (!(sigma > 0)) sigma = 1.0;
  }
  return HamiltonianSpec::gaussian(sigma, std::move(alg));
}

}  // namespace gencert
