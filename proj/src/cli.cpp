#include "wmfc/cli.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wmfc/adjoint.hpp"
#include "wmfc/config.hpp"
#include "wmfc/csv.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/gateaux.hpp"
#include "wmfc/lq_oracle.hpp"
#include "wmfc/measure.hpp"
#include "wmfc/optimize.hpp"
#include "wmfc/parallel.hpp"
#include "wmfc/rng.hpp"
#include "wmfc/validate.hpp"
#include "wmfc/variational.hpp"

namespace wmfc {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Check {
  std::string name;
  double value, target, tol;
  bool pass;
};

struct Ctx {
  ExperimentConfig cfg;
  ModelPtr model;
  TimeGrid grid;
  SimOptions sim;
  std::string dir, ts, sub;
  std::vector<Check> checks;
  std::vector<std::string> artifacts;

  void check(std::string name, double value, double target, double tol, bool pass) {
    checks.push_back({std::move(name), value, target, tol, pass});
  }
  std::string path(const std::string& table) const {
    const std::string stem = table.empty() ? sub : sub + "_" + table;
    return (std::filesystem::path(dir) / (stem + "_" + ts + ".csv")).string();
  }
  void save(const CsvTable& t, const std::string& table = "") {
    const std::string p = path(table);
    t.save(p);
    artifacts.push_back(p);
  }
};

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

ControlPolicy base_policy(const Ctx& c) { return initial_policy(c.cfg, *c.model); }

ParticleCloud base_cloud(const Ctx& c, const ControlPolicy& pol) {
  return simulate_self_consistent(*c.model, ControlSpec::closed_loop(pol), c.grid, c.sim);
}

// ---- simulate: forward cloud, weight moments
void cmd_simulate(Ctx& c) {
  const Model& model = *c.model;
  const ControlPolicy pol = base_policy(c);
  const ParticleCloud cl = base_cloud(c, pol);
  const int M = c.grid.M;
  std::vector<std::string> cols{"step", "t", "mean_x", "mean_a"};
  for (const auto& f : model.features()) cols.push_back("feature_" + f.name);
  CsvTable paths(cols);
  std::vector<double> xs(c.sim.N), as(c.sim.N);
  for (int m = 0; m <= M; ++m) {
    for (std::size_t i = 0; i < c.sim.N; ++i) {
      xs[i] = cl.x(m, i)[0];
      as[i] = cl.a(m, i);
    }
    std::vector<std::string> r{std::to_string(m), fmt(c.grid.t(m)), fmt(mean_stderr(xs.data(), xs.size()).mean),
                               fmt(mean_stderr(as.data(), as.size()).mean)};
    for (int j = 0; j < model.J(); ++j) r.push_back(fmt(cl.flow.at(m)[j]));
    paths.row(r);
  }
  c.save(paths, "paths");

  // weight moments are available in closed form when alpha, beta, gamma are constants
  double alpha = 0.0, a0 = model.a0();
  std::vector<double> beta;
  std::vector<Mark> marks;
  bool closed = false;
  if (c.cfg.model_kind == "weight_const") {
    alpha = c.cfg.wc.alpha;
    beta = c.cfg.wc.beta;
    marks = c.cfg.marks;
    closed = true;
  } else if (c.cfg.model_kind == "lq") {
    alpha = c.cfg.lq.alpha;
    beta = {c.cfg.lq.beta};
    closed = true;
  }
  if (closed) {
    double b2 = 0.0;
    for (double b : beta) b2 += b * b;
    for (int p : {1, 2, 4}) {
      double ex = p * alpha + 0.5 * p * (p - 1) * b2;
      for (const auto& mk : marks) ex += mk.lambda * (std::pow(1.0 + mk.z, p) - 1.0 - p * mk.z);
      const double target = std::pow(a0, p) * std::exp(c.grid.T * ex);
      for (std::size_t i = 0; i < c.sim.N; ++i) as[i] = std::pow(cl.a(M, i), p);
      const MeanStd ms = mean_stderr(as.data(), as.size());
      c.check("weight_moment_p" + std::to_string(p), ms.mean, target, 3.0 * ms.se,
              std::abs(ms.mean - target) <= 3.0 * ms.se);
    }
    if (alpha == 0.0) {
      for (std::size_t i = 0; i < c.sim.N; ++i) as[i] = cl.a(M, i);
      const MeanStd ms = mean_stderr(as.data(), as.size());
      c.check("weight_martingale", ms.mean, a0, 3.0 * ms.se, std::abs(ms.mean - a0) <= 3.0 * ms.se);
    }
  }
  for (std::size_t i = 0; i < c.sim.N; ++i) xs[i] = cl.x(M, i)[0];
  const double mx = mean_stderr(xs.data(), xs.size()).mean;
  c.check("finite_terminal_mean", mx, 0.0, 0.0, std::isfinite(mx));
}

// b13 + beta sigma13 = 0 on the grid takes the control out of the mean-flow ODE
bool control_free_mean(const Ctx& c) {
  const LQParams& p = c.cfg.lq;
  for (int m = 0; m < c.grid.M; ++m) {
    const double t = c.grid.t(m);
    if (std::abs(p.b13(t) + p.beta * p.s13(t)) > 1e-12) return false;
  }
  return true;
}

// max over nodes of |E[A X](t_m) - mean_flow(t_m)| / se
double mean_flow_z(const Ctx& c, const ParticleCloud& cl) {
  double worst = 0.0;
  std::vector<double> v(c.sim.N);
  for (int m = 1; m <= c.grid.M; ++m) {
    for (std::size_t i = 0; i < c.sim.N; ++i) v[i] = cl.a(m, i) * cl.x(m, i)[0];
    const MeanStd ms = mean_stderr(v.data(), v.size());
    const double z = std::abs(ms.mean - mean_flow(c.cfg.lq, c.grid.t(m))) / ms.se;
    worst = std::max(worst, z);
  }
  return worst;
}

void cmd_picard(Ctx& c) {
  const Model& model = *c.model;
  const ControlPolicy pol = base_policy(c);
  PicardResult res;
  try {
    res = picard_measure_flow(model, ControlSpec::closed_loop(pol), c.grid, c.sim, c.cfg.picard_tol,
                              c.cfg.picard_max_iter);
  } catch (const NonConvergenceError& e) {
    res.trace = e.trace();
    res.converged = false;
    res.iterations = c.cfg.picard_max_iter;
  }
  CsvTable tr({"iter", "sup_feature_delta", "lpq_p", "lpq_q", "lpq_value"});
  for (const auto& r : res.trace)
    tr.row({std::to_string(r.iter), fmt(r.sup_feature_delta), fmt(r.lpq_p), fmt(r.lpq_q), fmt(r.lpq_value)});
  c.save(tr, "trace");
  c.check("converged", res.iterations, c.cfg.picard_max_iter, 0.0, res.converged);
  if (!res.converged) return;
  if (model.J() == 0) c.check("mu_independent_one_iteration", res.iterations, 1, 0.0, res.iterations == 1);
  if (c.cfg.model_kind == "lq" && control_free_mean(c)) {
    const double z = mean_flow_z(c, res.cloud);
    c.check("mean_flow_max_z", z, 0.0, 3.0, z <= 3.0);
  }
  if (c.cfg.model_kind == "toy" || c.cfg.model_kind == "toy2d") {
    bool mono = true;
    for (std::size_t r = 2; r < res.trace.size(); ++r)
      if (!(res.trace[r].lpq_value < res.trace[r - 1].lpq_value) && res.trace[r - 1].lpq_value > 0.0) mono = false;
    c.check("lpq_monotone", mono ? 1.0 : 0.0, 1.0, 0.0, mono);
    double best = 1e300;
    for (const auto& r : res.trace)
      if (r.iter <= 8) best = std::min(best, r.lpq_value);
    c.check("lpq_below_1e-3_by_iter_8", best, 1e-3, 0.0, best < 1e-3);
  }
}

void cmd_variational(Ctx& c) {
  const Model& model = *c.model;
  const ControlPolicy pol = base_policy(c);
  const ParticleCloud base = base_cloud(c, pol);
  const ControlPolicy dir = c.cfg.var_direction == "constant"
                                ? ControlPolicy::constant(pol.k(), pol.d(), 1.0, c.grid.T, {}, pol.mode(), pol.basis())
                                : random_direction(pol, c.sim.seed, 0);
  VariationalOptions vo;
  vo.mode = c.cfg.var_perturbation == "open_loop" ? Perturbation::OpenLoop : Perturbation::ClosedLoop;
  const ConvergenceReport rep = convergence_check(model, base, pol, dir, c.cfg.var_eps, vo);

  // linearization rate at eps = 0.1 and 0.05 with common noise
  const std::vector<double> vpath = direction_path(dir, base);
  const double e1 = linearization_error(perturbed_cloud(model, base, pol, dir, &vpath, 0.1, vo.mode), base);
  const double e2 = linearization_error(perturbed_cloud(model, base, pol, dir, &vpath, 0.05, vo.mode), base);
  const double slope = std::log2(e1 / e2);

  CsvTable t({"eps", "D", "err_X", "err_A"});
  for (const auto& r : rep.rows) t.row({fmt(r.eps), fmt(r.D), fmt(r.err_X), fmt(r.err_A)});
  c.save(t, "convergence");
  c.check("D_strictly_decreasing", rep.decreasing ? 1.0 : 0.0, 1.0, 0.0, rep.decreasing);
  c.check("linearization_slope", slope, 2.0, 0.3, std::abs(slope - 2.0) <= 0.3);

  const ControlPolicy zero = dir.axpy(-1.0, dir);
  const ConvergenceReport z = convergence_check(model, base, pol, zero, {c.cfg.var_eps.front()}, vo);
  c.check("D_zero_for_zero_direction", z.rows.front().D, 0.0, 0.0, z.rows.front().D == 0.0);
}

void cmd_adjoint(Ctx& c) {
  const Model& model = *c.model;
  const ControlPolicy pol = base_policy(c);
  const ParticleCloud base = base_cloud(c, pol);
  const AdjointCloud adj = solve_adjoint(model, base);
  {
    const std::string p = c.path("data");
    std::ofstream f(p, std::ios::binary);
    write_adjoint_csv(f, adj, 200);
    c.artifacts.push_back(p);
  }
  {
    const std::string p = c.path("diagnostics");
    std::ofstream f(p, std::ios::binary);
    write_adjoint_diagnostics(f, adj);
    c.artifacts.push_back(p);
  }
  double zmax = 0.0;
  for (const auto& d : adj.diag)
    zmax = std::max(zmax, d.residual_se > 0.0 ? std::abs(d.residual_mean) / d.residual_se : 0.0);
  c.check("martingale_residual_max_z", zmax, 0.0, 3.0, zmax <= 3.0);


  // duality gap on M/2 and M with common fine noise
  if (c.grid.M % 2 == 0) {
    const ControlPolicy dir = random_direction(pol, c.sim.seed, 0);
    auto gap = [&](const TimeGrid& gr, int refine) {
      SimOptions so = c.sim;
      so.refine = refine;
      const ParticleCloud b = simulate_self_consistent(model, ControlSpec::closed_loop(pol), gr, so);
      const AdjointCloud a = solve_adjoint(model, b);
      const VariationalCloud v = simulate_variational(model, b, nullptr, dir);
      return duality_check(model, b, a, v);
    };
    const DualityReport coarse = gap(TimeGrid(c.grid.T, c.grid.M / 2), 2 * c.sim.refine);
    const DualityReport fine = gap(c.grid, c.sim.refine);
    CsvTable d({"M", "lhs", "rhs", "martingale", "abs_diff", "stderr"});
    for (const auto& [Mi, r] : {std::pair{c.grid.M / 2, coarse}, std::pair{c.grid.M, fine}})
      d.row({std::to_string(Mi), fmt(r.lhs), fmt(r.rhs), fmt(r.martingale), fmt(r.abs_diff), fmt(r.se)});
    c.save(d, "duality");
    // the gap is a discretization error only on the LQ bundle; elsewhere regression error can dominate
    if (c.cfg.model_kind == "lq")
      c.check("duality_gap_decreases", fine.abs_diff, coarse.abs_diff, 0.0, fine.abs_diff < coarse.abs_diff);
  }
}

// three Gateaux routes on random directions at the configured initial policy
void gateaux_table(Ctx& c) {
  const Model& model = *c.model;
  const ControlPolicy pol = base_policy(c);
  const ParticleCloud base = base_cloud(c, pol);
  const AdjointCloud adj = solve_adjoint(model, base);
  const std::vector<double> Hu = hamiltonian_u_path(model, base, adj);
  CsvTable g({"direction", "adjoint", "adjoint_se", "variational", "variational_se", "fd", "fd_se", "fd_trunc"});
  for (int k = 0; k < c.cfg.gateaux_directions; ++k) {
    const ControlPolicy dir = random_direction(pol, c.sim.seed, 100 + k);
    const std::vector<double> vp = direction_path(dir, base);
    const GateauxResult ga = gateaux_adjoint(model, base, Hu, vp);
    const GateauxResult gv = gateaux_variational(model, base, dir);
    const GateauxResult gf = gateaux_fd(model, base, vp, c.cfg.gateaux_eps);
    g.row({std::to_string(k), fmt(ga.value), fmt(ga.se), fmt(gv.value), fmt(gv.se), fmt(gf.value), fmt(gf.se),
           fmt(gf.trunc)});
    const double fd_err = std::hypot(gf.se, gf.trunc);
    const double ta = 3.0 * std::hypot(ga.se, fd_err), tv = 3.0 * std::hypot(gv.se, fd_err);
    c.check("gateaux_adjoint_vs_fd_dir" + std::to_string(k), ga.value, gf.value, ta, std::abs(ga.value - gf.value) <= ta);
    c.check("gateaux_variational_vs_fd_dir" + std::to_string(k), gv.value, gf.value, tv,
            std::abs(gv.value - gf.value) <= tv);
  }
  c.save(g, "gateaux");
}

void cmd_check_gradients(Ctx& c) {
  const DerivativeReport rep = check_derivatives(*c.model, 1e-6);
  CsvTable t({"evaluator", "probe", "analytic", "fd", "err"});
  for (const auto& f : rep.failures) t.row({f.evaluator, std::to_string(f.probe), fmt(f.analytic), fmt(f.fd), fmt(f.err)});
  c.save(t, "failures");
  c.check("derivative_failures", static_cast<double>(rep.failures.size()), 0.0, 0.0, rep.passed());
  c.check("derivative_checks", rep.checks, 0.0, 0.0, rep.checks > 0);
  gateaux_table(c);
}

OptimizeOptions optimize_options(const Ctx& c) {
  OptimizeOptions o;
  o.iters = c.cfg.opt_iters;
  o.step = c.cfg.opt_step;
  o.tol = c.cfg.opt_tol;
  o.rel_tol = c.cfg.opt_rel_tol;
  o.basis = control_basis(c.cfg);
  return o;
}

void trace_table(Ctx& c, const std::vector<OptimizeRecord>& trace) {
  CsvTable t({"iter", "J", "stderr", "Hu_norm", "step"});
  for (const auto& r : trace) t.row({std::to_string(r.iter), fmt(r.J), fmt(r.se), fmt(r.Hu_norm), fmt(r.step)});
  c.save(t, "trace");
}

void descent_checks(Ctx& c, const std::vector<OptimizeRecord>& tr) {
  const double red = tr.front().Hu_norm / std::max(tr.back().Hu_norm, 1e-300);
  c.check("Hu_reduction", red, 100.0, 0.0, red >= 100.0);
  bool mono = true;
  for (std::size_t r = 1; r < tr.size(); ++r)
    if (tr[r].J > tr[r - 1].J + 3.0 * tr[r - 1].se) mono = false;
  c.check("J_non_increasing", tr.back().J, tr.front().J, 3.0 * tr.front().se, mono);
}

void cmd_optimize(Ctx& c) {
  const Model& model = *c.model;
  OptimizeResult res;
  try {
    res = pontryagin_descent(model, base_policy(c), c.grid, c.sim, optimize_options(c));
  } catch (const StallError& e) {
    trace_table(c, e.trace());
    c.check("stall", 1.0, 0.0, 0.0, false);
    return;
  }
  trace_table(c, res.trace);
  descent_checks(c, res.trace);
  if (model.convex()) {
    const ProbeReport pr = sufficiency_probe(model, res.policy, c.grid, c.sim, 20, {0.05, 0.1}, c.sim.seed + 1);
    CsvTable t({"direction", "eps", "J", "J_bar", "se_bar", "diff", "diff_se", "violation"});
    for (const auto& r : pr.rows)
      t.row({std::to_string(r.direction), fmt(r.eps), fmt(r.J), fmt(r.J_bar), fmt(r.se_bar), fmt(r.diff), fmt(r.diff_se),
             r.violation ? "1" : "0"});
    c.save(t, "probe");
    c.check("sufficiency_violations", pr.violations, 0.0, 0.0, pr.violations == 0);
  }
}

void cmd_lq_verify(Ctx& c) {
  if (c.cfg.model_kind != "lq") throw ConfigError("lq-verify: needs model.kind = lq");
  const Model& model = *c.model;
  const LQParams& p = c.cfg.lq;
  const ParticleCloud cl = base_cloud(c, base_policy(c));
  if (control_free_mean(c)) {
    const double z = mean_flow_z(c, cl);
    c.check("mean_flow_max_z", z, 0.0, 3.0, z <= 3.0);
  }
  {
    std::vector<double> a(c.sim.N);
    for (std::size_t i = 0; i < c.sim.N; ++i) a[i] = cl.a(c.grid.M, i);
    const MeanStd ms = mean_stderr(a.data(), a.size());
    const double w = weight_mean(p, c.grid.T);
    c.check("weight_mean", ms.mean, w, 3.0 * ms.se, std::abs(ms.mean - w) <= 3.0 * ms.se);
  }
  OptimizeResult res;
  try {
    res = pontryagin_descent(model, base_policy(c), c.grid, c.sim, optimize_options(c));
  } catch (const StallError& e) {
    trace_table(c, e.trace());
    c.check("stall", 1.0, 0.0, 0.0, false);
    return;
  }
  trace_table(c, res.trace);
  descent_checks(c, res.trace);
  if (p.decoupled()) {
    const RiccatiSolution ric = riccati(p, c.grid.T, c.grid.M);
    const double J = res.trace.back().J;
    const double rel = std::abs(J - ric.J) / std::abs(ric.J);
    c.check("riccati_cost_rel", rel, 0.0, 0.02, rel <= 0.02);
    // gain of the learned control as its L2(P) projection on u = g x; at t = 0 the
    // cloud sits at one point, where only the product g x0 is identified
    const ParticleCloud fin = base_cloud(c, res.policy);
    double num = 0.0, den = 0.0;
    for (int m = 0; m < c.grid.M; ++m) {
      double ux = 0.0, xx = 0.0;
      for (std::size_t i = 0; i < c.sim.N; ++i) {
        ux += fin.u(m, i)[0] * fin.x(m, i)[0];
        xx += fin.x(m, i)[0] * fin.x(m, i)[0];
      }
      const double g = xx > 0.0 ? ux / xx : 0.0;
      num += c.grid.dt() * (g - ric.gain[m]) * (g - ric.gain[m]);
      den += c.grid.dt() * ric.gain[m] * ric.gain[m];
    }
    const double grel = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    c.check("riccati_gain_rel_l2", grel, 0.0, 0.05, grel <= 0.05);
  }
}

WeightedMeasure measure_of(const std::vector<std::pair<double, double>>& atoms) {
  WeightedMeasure mu(1);
  for (auto [w, x] : atoms) mu.add(w, {x});
  return mu;
}

void cmd_rho(Ctx& c) {
  const WeightedMeasure m1 = measure_of(c.cfg.rho_mu1), m2 = measure_of(c.cfg.rho_mu2);
  const double r12 = rho_distance(m1, m2), r21 = rho_distance(m2, m1);
  c.check("rho", r12, 0.0, 0.0, std::isfinite(r12) && r12 >= 0.0);
  c.check("rho_symmetric", r12, r21, 0.0, r12 == r21);
  // axioms on random triples
  CounterRng rng(c.sim.seed, 0, 0, Stream::Probes);
  auto rnd = [&rng]() {
    WeightedMeasure mu(1);
    const int n = 1 + static_cast<int>(rng.uniform() * 10.0);
    for (int i = 0; i < n; ++i) mu.add(0.05 + rng.uniform(), {4.0 * rng.uniform() - 2.0});
    return mu;
  };
  double worst = -1e300;
  bool sym = true;
  for (int t = 0; t < 50; ++t) {
    const auto a = rnd(), b = rnd(), d = rnd();
    const double ab = rho_distance(a, b), bd = rho_distance(b, d), ad = rho_distance(a, d);
    worst = std::max(worst, ad - ab - bd);
    sym = sym && ab == rho_distance(b, a);
  }
  c.check("triangle_slack", worst, 0.0, 1e-9, worst <= 1e-9);
  c.check("symmetry_random", sym ? 1.0 : 0.0, 1.0, 0.0, sym);
  CsvTable t({"measure", "weight", "x"});
  for (auto [w, x] : c.cfg.rho_mu1) t.row({"mu1", fmt(w), fmt(x)});
  for (auto [w, x] : c.cfg.rho_mu2) t.row({"mu2", fmt(w), fmt(x)});
  c.save(t, "measures");
}

void cmd_validate(Ctx& c) {
  ProbeSpec ps;
  if (c.cfg.control_box) {
    ps.u_lo = c.cfg.control_box->first;
    ps.u_hi = c.cfg.control_box->second;
  }
  const HypothesisReport rep = validate_hypotheses(*c.model, ps);
  for (const auto& r : rep.rows) c.check(r.condition, r.empirical, r.declared, 0.0, r.pass);
}

bool gated(const std::string& sub) {
  return sub == "simulate" || sub == "picard" || sub == "variational-check" || sub == "adjoint" || sub == "optimize" ||
         sub == "lq-verify";
}

}  // namespace

std::vector<std::string> subcommands() {
  return {"simulate", "picard", "variational-check", "adjoint", "check-gradients",
          "optimize", "lq-verify", "rho", "validate-model"};
}

RunResult run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  RunResult rr;
  const auto subs = subcommands();
  if (std::find(subs.begin(), subs.end(), opt.subcommand) == subs.end()) {
    err << "wmfc: config error: unknown subcommand " << opt.subcommand << '\n';
    rr.exit_code = 2;
    return rr;
  }
  Ctx c;
  try {
    c.cfg = opt.config_path.empty() ? parse_config(opt.config_text, opt.overrides)
                                    : load_config(opt.config_path, opt.overrides);
    if (opt.seed) {
      c.cfg.seed = *opt.seed;
      c.cfg.resolved["mc.seed"] = std::to_string(*opt.seed);
    }
    if (opt.out_dir) c.cfg.output_dir = *opt.out_dir;
    c.model = build_model(c.cfg);
    c.grid = TimeGrid(c.cfg.T, c.cfg.M);
  } catch (const std::exception& e) {
    err << "wmfc: config error: " << e.what() << '\n';
    rr.exit_code = 2;
    return rr;
  }
  c.sim = SimOptions{c.cfg.N, c.cfg.seed, 1};
  c.sub = opt.subcommand;
  c.dir = c.cfg.output_dir;
  c.ts = opt.timestamp.empty() ? utc_stamp() : opt.timestamp;
  const int prev_threads = threads();
  set_threads(opt.threads);

  try {
    std::filesystem::create_directories(c.dir);
    if (gated(c.sub)) {
      ProbeSpec ps;
      if (c.cfg.control_box) {
        ps.u_lo = c.cfg.control_box->first;
        ps.u_hi = c.cfg.control_box->second;
      }
      const HypothesisReport hr = validate_hypotheses(*c.model, ps);
      if (!hr.passed() && !opt.force) {
        for (const auto& r : hr.rows)
          if (!r.pass)
            err << "wmfc: FAIL validation " << r.condition << " empirical=" << r.empirical << " declared=" << r.declared
                << " (use --force to run anyway)\n";
        set_threads(prev_threads);
        rr.exit_code = 1;
        return rr;
      }
    }
    if (c.sub == "simulate") cmd_simulate(c);
    else if (c.sub == "picard") cmd_picard(c);
    else if (c.sub == "variational-check") cmd_variational(c);
    else if (c.sub == "adjoint") cmd_adjoint(c);
    else if (c.sub == "check-gradients") cmd_check_gradients(c);
    else if (c.sub == "optimize") cmd_optimize(c);
    else if (c.sub == "lq-verify") cmd_lq_verify(c);
    else if (c.sub == "rho") cmd_rho(c);
    else cmd_validate(c);
  } catch (const ConfigError& e) {
    err << "wmfc: config error: " << e.what() << '\n';
    set_threads(prev_threads);
    rr.exit_code = 2;
    return rr;
  } catch (const std::exception& e) {
    err << "wmfc: FAIL error " << e.what() << '\n';
    c.check("error", 1.0, 0.0, 0.0, false);
  }

  CsvTable summary({"check", "value", "target", "tol", "pass"});
  bool ok = true;
  for (const auto& k : c.checks) {
    summary.row({k.name, fmt(k.value), fmt(k.target), fmt(k.tol), k.pass ? "1" : "0"});
    out << (k.pass ? "PASS " : "FAIL ") << k.name << " value=" << fmt(k.value) << " target=" << fmt(k.target)
        << " tol=" << fmt(k.tol) << '\n';
    if (!k.pass) {
      ok = false;
      err << "wmfc: FAIL " << k.name << " value=" << fmt(k.value) << " target=" << fmt(k.target) << " tol=" << fmt(k.tol)
          << '\n';
    }
  }
  try {
    c.save(summary);
    nlohmann::json man;
    man["subcommand"] = c.sub;
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(c.cfg)));
    man["config_hash"] = hash;
    man["seed"] = c.cfg.seed;
    man["threads"] = opt.threads;
    man["timestamp"] = c.ts;
    man["versions"] = {{"wmfc", kVersion},
                       {"compiler", __VERSION__},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)}};
    man["artifacts"] = c.artifacts;
    const std::string mp = (std::filesystem::path(c.dir) / ("manifest_" + c.sub + "_" + c.ts + ".json")).string();
    std::ofstream f(mp, std::ios::binary);
    f << man.dump(2) << '\n';
    c.artifacts.push_back(mp);
  } catch (const std::exception& e) {
    err << "wmfc: FAIL error " << e.what() << '\n';
    ok = false;
  }
  set_threads(prev_threads);
  rr.exit_code = ok ? 0 : 1;
  rr.artifacts = c.artifacts;
  return rr;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"weighted mean-field control laboratory"};
  RunOptions opt;
  std::string config_pos;
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("subcommand", opt.subcommand, "one of: simulate picard variational-check adjoint check-gradients "
                                               "optimize lq-verify rho validate-model")
      ->required();
  app.add_option("config_file", config_pos, "config file (same as --config)");
  app.add_option("--config", opt.config_path, "config file");
  auto* seed_opt = app.add_option("--seed", seed, "Monte Carlo seed (overrides WMFC_SEED and mc.seed)");
  app.add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 256));
  auto* out_opt = app.add_option("--out", out, "output directory");
  app.add_flag("--force", opt.force, "run even when model validation fails");
  std::vector<std::string> sugar;
  auto alias = [&](const char* flag, const char* key, const char* help) {
    app.add_option_function<std::string>(
        flag, [&sugar, key](const std::string& v) { sugar.push_back(std::string(key) + "=" + v); }, help);
  };
  alias("--iters", "optimizer.iters", "optimizer iterations");
  alias("--step", "optimizer.step", "optimizer initial step");
  alias("--tol", "optimizer.tol", "optimizer stationarity tolerance");
  alias("--eps-list", "variational.eps_list", "variational eps list, e.g. [0.2,0.1,0.05]");
  alias("--direction", "variational.direction", "variational direction: constant | random-basis");
  std::string model_path;
  app.add_option("--model", model_path, "model config file (same as --config)");
  app.add_option("--timestamp", opt.timestamp, "artifact name stamp (default: current UTC time)");
  app.add_option("--set", opt.overrides, "config override key=value (repeatable)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  opt.overrides.insert(opt.overrides.begin(), sugar.begin(), sugar.end());
  if (opt.config_path.empty()) opt.config_path = model_path;
  if (opt.config_path.empty()) opt.config_path = config_pos;
  if (opt.config_path.empty()) {
    std::cerr << "wmfc: config error: no config file given\n";
    return 2;
  }
  if (*seed_opt) {
    opt.seed = seed;
  } else if (const char* env = std::getenv("WMFC_SEED")) {
    try {
      opt.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "wmfc: config error: WMFC_SEED is not an unsigned integer\n";
      return 2;
    }
  }
  if (*out_opt) opt.out_dir = out;
  return run(opt, std::cout, std::cerr).exit_code;
}

}  // namespace wmfc
