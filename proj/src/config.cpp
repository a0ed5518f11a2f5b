#include "wmfc/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace wmfc {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json parse_value(const std::string& key, const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    // bare words are strings, anything else that looks structured is an error
    if (text.empty() || text.find_first_of("[]{},\"") != std::string::npos)
      throw ConfigError("config: cannot parse value of " + key + ": " + text);
    return json(text);
  }
}

double num(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError("config: " + key + " must be a number");
  return v.get<double>();
}

long long integer(const std::string& key, const json& v) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("config: " + key + " must be an integer");
  return v.get<long long>();
}

std::string str(const std::string& key, const json& v) {
  if (!v.is_string()) throw ConfigError("config: " + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> numlist(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError("config: " + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(num(key, e));
  return out;
}

std::vector<std::pair<double, double>> pairlist(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError("config: " + key + " must be an array of [a, b] pairs");
  std::vector<std::pair<double, double>> out;
  for (const auto& e : v) {
    const auto p = numlist(key, e);
    if (p.size() != 2) throw ConfigError("config: " + key + " entries must be [a, b] pairs");
    out.emplace_back(p[0], p[1]);
  }
  return out;
}

PiecewiseConstant piecewise(const std::string& key, const json& v) {
  if (v.is_number()) return PiecewiseConstant(v.get<double>());
  if (!v.is_object() || !v.contains("knots") || !v.contains("values"))
    throw ConfigError("config: " + key + " must be a number or {\"knots\": [...], \"values\": [...]}");
  PiecewiseConstant p;
  p.knots = numlist(key, v["knots"]);
  p.values = numlist(key, v["values"]);
  if (p.knots.empty() || p.knots.size() != p.values.size() || p.knots.front() != 0.0 ||
      !std::is_sorted(p.knots.begin(), p.knots.end()))
    throw ConfigError("config: " + key + " needs sorted knots starting at 0, one value per knot");
  return p;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = [] {
    std::map<std::string, Setter> m;
    m["model.kind"] = [](auto& c, auto& k, auto& v) { c.model_kind = str(k, v); };
    m["model.lq.b11"] = [](auto& c, auto& k, auto& v) { c.lq.b11 = piecewise(k, v); };
    m["model.lq.b12"] = [](auto& c, auto& k, auto& v) { c.lq.b12 = piecewise(k, v); };
    m["model.lq.b13"] = [](auto& c, auto& k, auto& v) { c.lq.b13 = piecewise(k, v); };
    m["model.lq.sigma11"] = [](auto& c, auto& k, auto& v) { c.lq.s11 = piecewise(k, v); };
    m["model.lq.sigma12"] = [](auto& c, auto& k, auto& v) { c.lq.s12 = piecewise(k, v); };
    m["model.lq.sigma13"] = [](auto& c, auto& k, auto& v) { c.lq.s13 = piecewise(k, v); };
    m["model.lq.alpha"] = [](auto& c, auto& k, auto& v) { c.lq.alpha = num(k, v); };
    m["model.lq.beta"] = [](auto& c, auto& k, auto& v) { c.lq.beta = num(k, v); };
    m["model.lq.R1"] = [](auto& c, auto& k, auto& v) { c.lq.R1 = num(k, v); };
    m["model.lq.R2"] = [](auto& c, auto& k, auto& v) { c.lq.R2 = num(k, v); };
    m["model.lq.Phi"] = [](auto& c, auto& k, auto& v) { c.lq.Phi = num(k, v); };
    m["model.lq.x"] = [](auto& c, auto& k, auto& v) { c.lq.x = num(k, v); };
    m["model.lq.a"] = [](auto& c, auto& k, auto& v) { c.lq.a = num(k, v); };
    m["model.lq.decoupled_baseline"] = [](auto& c, auto& k, auto& v) {
      if (!v.is_boolean()) throw ConfigError("config: " + k + " must be true or false");
      c.lq.decoupled_baseline = v.template get<bool>();
    };
    m["model.mv.r"] = [](auto& c, auto& k, auto& v) { c.mv.r = num(k, v); };
    m["model.mv.b0"] = [](auto& c, auto& k, auto& v) { c.mv.b0 = num(k, v); };
    m["model.mv.b_mu"] = [](auto& c, auto& k, auto& v) { c.mv.b_mu = num(k, v); };
    m["model.mv.sigma0"] = [](auto& c, auto& k, auto& v) { c.mv.sigma0 = num(k, v); };
    m["model.mv.sigma_mu"] = [](auto& c, auto& k, auto& v) { c.mv.sigma_mu = num(k, v); };
    m["model.mv.gamma"] = [](auto& c, auto& k, auto& v) { c.mv.gamma = numlist(k, v); };
    m["model.mv.alpha"] = [](auto& c, auto& k, auto& v) { c.mv.alpha = num(k, v); };
    m["model.mv.beta"] = [](auto& c, auto& k, auto& v) { c.mv.beta = num(k, v); };
    m["model.mv.lambda"] = [](auto& c, auto& k, auto& v) { c.mv.lambda_mv = num(k, v); };
    m["model.mv.x"] = [](auto& c, auto& k, auto& v) { c.mv.x = num(k, v); };
    m["model.mv.a"] = [](auto& c, auto& k, auto& v) { c.mv.a = num(k, v); };
    m["model.wc.alpha"] = [](auto& c, auto& k, auto& v) { c.wc.alpha = num(k, v); };
    m["model.wc.beta"] = [](auto& c, auto& k, auto& v) { c.wc.beta = v.is_number() ? std::vector<double>{num(k, v)} : numlist(k, v); };
    m["model.wc.sigma"] = [](auto& c, auto& k, auto& v) { c.wc.sigma = num(k, v); };
    m["model.wc.x"] = [](auto& c, auto& k, auto& v) { c.wc.x = num(k, v); };
    m["model.wc.a"] = [](auto& c, auto& k, auto& v) { c.wc.a = num(k, v); };
    m["model.toy.coupling"] = [](auto& c, auto& k, auto& v) { c.toy_coupling = num(k, v); };
    m["jumps.marks"] = [](auto& c, auto& k, auto& v) {
      c.marks.clear();
      for (auto [z, l] : pairlist(k, v)) c.marks.push_back({z, l});
    };
    m["grid.T"] = [](auto& c, auto& k, auto& v) { c.T = num(k, v); };
    m["grid.M"] = [](auto& c, auto& k, auto& v) { c.M = static_cast<int>(integer(k, v)); };
    m["mc.N"] = [](auto& c, auto& k, auto& v) {
      const auto n = integer(k, v);
      if (n < 2) throw ConfigError("config: mc.N must be at least 2");
      c.N = static_cast<std::size_t>(n);
    };
    m["mc.seed"] = [](auto& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(integer(k, v)); };
    m["picard.tol"] = [](auto& c, auto& k, auto& v) { c.picard_tol = num(k, v); };
    m["picard.max_iter"] = [](auto& c, auto& k, auto& v) { c.picard_max_iter = static_cast<int>(integer(k, v)); };
    m["optimizer.iters"] = [](auto& c, auto& k, auto& v) { c.opt_iters = static_cast<int>(integer(k, v)); };
    m["optimizer.step"] = [](auto& c, auto& k, auto& v) { c.opt_step = num(k, v); };
    m["optimizer.tol"] = [](auto& c, auto& k, auto& v) { c.opt_tol = num(k, v); };
    m["optimizer.rel_tol"] = [](auto& c, auto& k, auto& v) { c.opt_rel_tol = num(k, v); };
    m["control.mode"] = [](auto& c, auto& k, auto& v) { c.control_mode = str(k, v); };
    m["control.box"] = [](auto& c, auto& k, auto& v) {
      if (v.is_null()) {
        c.control_box.reset();
        return;
      }
      const auto b = numlist(k, v);
      if (b.size() != 2 || !(b[0] < b[1])) throw ConfigError("config: control.box must be [lo, hi] with lo < hi");
      c.control_box = std::make_pair(b[0], b[1]);
    };
    m["control.init"] = [](auto& c, auto& k, auto& v) { c.control_init = num(k, v); };
    m["control.basis"] = [](auto& c, auto& k, auto& v) { c.control_basis = str(k, v); };
    m["variational.eps_list"] = [](auto& c, auto& k, auto& v) { c.var_eps = numlist(k, v); };
    m["variational.perturbation"] = [](auto& c, auto& k, auto& v) { c.var_perturbation = str(k, v); };
    m["variational.direction"] = [](auto& c, auto& k, auto& v) { c.var_direction = str(k, v); };
    m["gateaux.eps"] = [](auto& c, auto& k, auto& v) { c.gateaux_eps = num(k, v); };
    m["gateaux.directions"] = [](auto& c, auto& k, auto& v) { c.gateaux_directions = static_cast<int>(integer(k, v)); };
    m["rho.mu1"] = [](auto& c, auto& k, auto& v) { c.rho_mu1 = pairlist(k, v); };
    m["rho.mu2"] = [](auto& c, auto& k, auto& v) { c.rho_mu2 = pairlist(k, v); };
    m["output.dir"] = [](auto& c, auto& k, auto& v) { c.output_dir = str(k, v); };
    return m;
  }();
  return s;
}

void apply(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const auto& s = setters();
  const auto it = s.find(key);
  if (it == s.end()) throw ConfigError("config: unknown key " + key);
  const json v = parse_value(key, raw);
  it->second(c, key, v);
  c.resolved[key] = v.dump();
}

void split_assignment(const std::string& line, std::string& key, std::string& val, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("config: expected key = value at " + where);
  key = trim(line.substr(0, eq));
  val = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError("config: empty key at " + where);
}

void check(const ExperimentConfig& c) {
  const auto names = builtin_model_names();
  if (std::find(names.begin(), names.end(), c.model_kind) == names.end())
    throw ConfigError("config: unknown model.kind " + c.model_kind);
  if (!(c.T > 0.0) || c.M < 1) throw ConfigError("config: need grid.T > 0 and grid.M >= 1");
  if (c.control_mode != "feedback" && c.control_mode != "open_loop")
    throw ConfigError("config: control.mode must be feedback or open_loop");
  if (c.control_basis != "default" && c.control_basis != "quadratic")
    throw ConfigError("config: control.basis must be default or quadratic");
  if (c.var_perturbation != "closed_loop" && c.var_perturbation != "open_loop")
    throw ConfigError("config: variational.perturbation must be closed_loop or open_loop");
  if (c.var_direction != "constant" && c.var_direction != "random-basis")
    throw ConfigError("config: variational.direction must be constant or random-basis");
  if (c.var_eps.empty()) throw ConfigError("config: variational.eps_list is empty");
  for (double e : c.var_eps)
    if (!(e > 0.0)) throw ConfigError("config: variational.eps_list entries must be positive");
  if (!(c.gateaux_eps > 0.0) || c.gateaux_directions < 1)
    throw ConfigError("config: need gateaux.eps > 0 and gateaux.directions >= 1");
  if (c.picard_max_iter < 1 || c.opt_iters < 0) throw ConfigError("config: iteration counts out of range");
  for (const auto* mu : {&c.rho_mu1, &c.rho_mu2})
    for (auto [w, x] : *mu)
      if (!(w > 0.0)) throw ConfigError("config: rho measure weights must be positive");
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& [name, _] : setters()) k.push_back(name);
  return k;
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  ExperimentConfig c;
  std::istringstream is(text);
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string key, val;
    split_assignment(line, key, val, "line " + std::to_string(ln));
    apply(c, key, val);
  }
  for (const auto& o : overrides) {
    std::string key, val;
    split_assignment(o, key, val, "override '" + o + "'");
    apply(c, key, val);
  }
  check(c);
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [k, v] : c.resolved) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  return h;
}

ModelPtr build_model(const ExperimentConfig& c) {
  try {
    if (c.model_kind == "lq") return make_lq_model(c.lq);
    if (c.model_kind == "mean_variance") {
      MeanVarianceParams p = c.mv;
      p.jumps = JumpSpec(c.marks);
      return make_mean_variance_model(p);
    }
    if (c.model_kind == "weight_const") {
      WeightConstParams p = c.wc;
      p.jumps = JumpSpec(c.marks);
      return make_weight_const_model(p);
    }
    if (c.model_kind == "trivial") return make_trivial_model();
    if (c.model_kind == "toy") return make_toy_model(c.toy_coupling);
    if (c.model_kind == "toy2d") return make_toy2d_model();
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("config: unknown model.kind " + c.model_kind);
}

ControlBox control_box(const ExperimentConfig& c, int k) {
  if (!c.control_box) return ControlBox::unbounded();
  return ControlBox::uniform(k, c.control_box->first, c.control_box->second);
}

BasisKind control_basis(const ExperimentConfig& c) {
  return c.control_basis == "quadratic" ? BasisKind::Quadratic : BasisKind::Default;
}

ControlPolicy initial_policy(const ExperimentConfig& c, const Model& model) {
  const auto& D = model.dims();
  const PolicyMode mode = c.control_mode == "open_loop" ? PolicyMode::OpenLoopGrid : PolicyMode::FeedbackBasis;
  return ControlPolicy::constant(D.k, D.d, c.control_init, c.T, control_box(c, D.k), mode, control_basis(c));
}

}  // namespace wmfc
