// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// `acceptance 3 12` runs only the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "wmfc/adjoint.hpp"
#include "wmfc/cli.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/gateaux.hpp"
#include "wmfc/lq_oracle.hpp"
#include "wmfc/measure.hpp"
#include "wmfc/optimize.hpp"
#include "wmfc/parallel.hpp"
#include "wmfc/rng.hpp"
#include "wmfc/validate.hpp"
#include "wmfc/variational.hpp"

using namespace wmfc;

namespace {

constexpr std::size_t kN = 100000;
constexpr int kM = 128;
constexpr double kT = 1.0;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

const std::vector<std::string> kBuiltins{"lq", "mean_variance", "weight_const", "trivial", "toy", "toy2d"};

ControlPolicy unit_policy(const Model& m) { return ControlPolicy::constant(m.dims().k, m.dims().d, 1.0, kT); }

ParticleCloud cloud(const Model& m, const ControlPolicy& pol, int M = kM, int refine = 1) {
  return simulate_self_consistent(m, ControlSpec::closed_loop(pol), TimeGrid(kT, M), {kN, kSeed, refine});
}

std::vector<double> terminal_weights(const ParticleCloud& c, double p) {
  std::vector<double> v(c.N);
  for (std::size_t i = 0; i < c.N; ++i) v[i] = std::pow(c.a(c.grid.M, i), p);
  return v;
}

// 1. E[A(T)^p] against the closed form
void weight_moments(Outcome& o) {
  WeightConstParams p;
  p.jumps = JumpSpec(fx::two_marks());
  const auto model = make_weight_const_model(p);
  const ParticleCloud c = cloud(*model, unit_policy(*model));
  for (double pw : {1.0, 2.0, 4.0}) {
    const auto v = terminal_weights(c, pw);
    const MeanStd ms = mean_stderr(v.data(), v.size());
    const double target = oracle::weight_moment(p.a, p.alpha, p.beta, p.jumps.marks, pw, kT);
    const double z = std::abs(ms.mean - target) / ms.se;
    o.detail << " p=" << pw << " mc=" << ms.mean << " exact=" << target << " z=" << z;
    o.require(z <= 3.0, "p=" + std::to_string(static_cast<int>(pw)));
  }
}

// 2. alpha = 0 with compensated jumps keeps E[A] at a
void weight_martingale(Outcome& o) {
  WeightConstParams p;
  p.alpha = 0.0;
  p.jumps = JumpSpec(fx::two_marks());
  const auto model = make_weight_const_model(p);
  const auto v = terminal_weights(cloud(*model, unit_policy(*model)), 1.0);
  const MeanStd ms = mean_stderr(v.data(), v.size());
  const double z = std::abs(ms.mean - p.a) / ms.se;
  o.detail << " E[A(T)]=" << ms.mean << " a=" << p.a << " z=" << z;
  o.require(z <= 3.0, "martingale");
}

// 3. Picard fixed point
void picard(Outcome& o) {
  const TimeGrid grid(kT, kM);
  const SimOptions sim{kN, kSeed, 1};
  {
    const LQParams lp = fx::coupled_lq();
    const auto model = make_lq_model(lp);
    const PicardResult r = picard_measure_flow(*model, ControlSpec::closed_loop(unit_policy(*model)), grid, sim, 1e-10, 20);
    double zmax = 0.0, odemax = 0.0;
    std::vector<double> v(kN);
    for (int m = 1; m <= kM; ++m) {
      for (std::size_t i = 0; i < kN; ++i) v[i] = r.cloud.a(m, i) * r.cloud.x(m, i)[0];
      const MeanStd ms = mean_stderr(v.data(), v.size());
      const double t = grid.t(m);
      const double exact = mean_flow(lp, t);
      zmax = std::max(zmax, std::abs(ms.mean - exact) / ms.se);
      // the closed form itself against an RK4 solve of the same ODE
      const double rk = oracle::mean_flow_rk4(lp.alpha, lp.beta, lp.b11(t), lp.b12(t), lp.s11(t), lp.s12(t), lp.x, lp.a, t);
      odemax = std::max(odemax, std::abs(exact - rk));
    }
    o.detail << " lq: iters=" << r.iterations << " max_z=" << zmax << " ode_err=" << odemax;
    o.require(r.converged && zmax <= 3.0, "lq mean flow");
    o.require(odemax <= 1e-8, "mean_flow vs rk4");
  }
  {
    WeightConstParams p;
    p.jumps = JumpSpec(fx::two_marks());
    const auto model = make_weight_const_model(p);
    const PicardResult r = picard_measure_flow(*model, ControlSpec::closed_loop(unit_policy(*model)), grid, sim, 1e-10, 20);
    o.detail << " mu-independent: iters=" << r.iterations;
    o.require(model->J() == 0 && r.converged && r.iterations == 1, "one iteration");
  }
  {
    const auto model = make_toy_model();
    PicardResult r;
    try {
      r = picard_measure_flow(*model, ControlSpec::closed_loop(unit_policy(*model)), grid, sim, 1e-10, 20);
    } catch (const NonConvergenceError& e) {
      r.trace = e.trace();
    }
    bool mono = true;
    double best = 1e300;
    o.detail << " toy lpq:";
    for (std::size_t k = 0; k < r.trace.size(); ++k) {
      const auto& row = r.trace[k];
      if (row.iter <= 8) o.detail << ' ' << row.lpq_value;
      if (k >= 2 && row.iter >= 2 && r.trace[k - 1].lpq_value > 0.0 && !(row.lpq_value < r.trace[k - 1].lpq_value))
        mono = false;
      if (row.iter <= 8) best = std::min(best, row.lpq_value);
    }
    o.require(mono, "toy monotone");
    o.require(best < 1e-3, "toy below 1e-3 by iteration 8");
  }
}

// 4. linearization rate
void linearization(Outcome& o) {
  for (const char* name : {"lq", "toy"}) {
    const auto model = fx::builtin(name);
    const ControlPolicy pol = unit_policy(*model);
    const ParticleCloud base = cloud(*model, pol);
    const ControlPolicy dir = random_direction(pol, kSeed, 0);
    const std::vector<double> vp = direction_path(dir, base);
    const double e1 = linearization_error(perturbed_cloud(*model, base, pol, dir, &vp, 0.1, Perturbation::ClosedLoop), base);
    const double e2 = linearization_error(perturbed_cloud(*model, base, pol, dir, &vp, 0.05, Perturbation::ClosedLoop), base);
    const double slope = std::log2(e1 / e2);
    o.detail << ' ' << name << " slope=" << slope;
    o.require(std::abs(slope - 2.0) <= 0.3, std::string(name) + " slope");
  }
}

// 5. variational convergence
void variational(Outcome& o) {
  for (const char* name : {"lq", "toy"}) {
    const auto model = fx::builtin(name);
    const ControlPolicy pol = unit_policy(*model);
    const ParticleCloud base = cloud(*model, pol);
    const ControlPolicy dir = random_direction(pol, kSeed, 0);
    VariationalOptions vo;
    vo.mode = Perturbation::ClosedLoop;
    const ConvergenceReport rep = convergence_check(*model, base, pol, dir, {0.2, 0.1, 0.05}, vo);
    o.detail << ' ' << name << " D:";
    for (const auto& r : rep.rows) o.detail << ' ' << r.D;
    o.require(rep.decreasing, std::string(name) + " strictly decreasing");
    const ControlPolicy zero = dir.axpy(-1.0, dir);
    const ConvergenceReport z = convergence_check(*model, base, pol, zero, {0.2}, vo);
    o.detail << " D(v=0)=" << z.rows.front().D;
    o.require(z.rows.front().D == 0.0, std::string(name) + " zero direction");
  }
}

// 6. adjoint, variational and finite-difference Gateaux derivatives
void gateaux(Outcome& o) {
  for (const auto& name : kBuiltins) {
    const auto model = fx::builtin(name);
    const ControlPolicy pol = unit_policy(*model);
    const ParticleCloud base = cloud(*model, pol);
    std::vector<double> Hu;
    {
      const AdjointCloud adj = solve_adjoint(*model, base);
      Hu = hamiltonian_u_path(*model, base, adj);
    }
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const ControlPolicy dir = random_direction(pol, kSeed, 100 + k);
      const std::vector<double> vp = direction_path(dir, base);
      const GateauxResult ga = gateaux_adjoint(*model, base, Hu, vp);
      const GateauxResult gv = gateaux_variational(*model, base, dir);
      const GateauxResult gf = gateaux_fd(*model, base, vp, 1e-4);
      const double fd_err = std::hypot(gf.se, gf.trunc);
      const double ta = 3.0 * std::hypot(ga.se, fd_err), tv = 3.0 * std::hypot(gv.se, fd_err);
      const double ra = ta > 0.0 ? std::abs(ga.value - gf.value) / ta : (ga.value == gf.value ? 0.0 : 1e300);
      const double rv = tv > 0.0 ? std::abs(gv.value - gf.value) / tv : (gv.value == gf.value ? 0.0 : 1e300);
      worst = std::max({worst, ra, rv});
      if (ra > 1.0 || rv > 1.0) {
        o.detail << ' ' << name << " dir" << k << " adj=" << ga.value << " var=" << gv.value << " fd=" << gf.value;
        o.require(false, name + " direction " + std::to_string(k));
      }
    }
    o.detail << ' ' << name << "=" << worst;
  }
  o.detail << " (worst |route - fd| / tolerance)";
}

// 7 and 9 share the optimized policy
ControlPolicy g_lq_opt;
bool g_lq_opt_ready = false;

void descent(Outcome& o) {
  const auto model = fx::builtin("lq");
  OptimizeOptions opt;
  opt.iters = 50;
  opt.rel_tol = 1e-2;  // stop once the 100x reduction is reached
  const OptimizeResult res = pontryagin_descent(*model, unit_policy(*model), TimeGrid(kT, kM), {kN, kSeed, 1}, opt);
  const auto& tr = res.trace;
  const double red = tr.front().Hu_norm / std::max(tr.back().Hu_norm, 1e-300);
  bool mono = true;
  for (std::size_t r = 1; r < tr.size(); ++r)
    if (tr[r].J > tr[r - 1].J + 3.0 * tr[r - 1].se) mono = false;
  o.detail << " iters=" << tr.size() - 1 << " |Hu| " << tr.front().Hu_norm << " -> " << tr.back().Hu_norm
           << " (x" << red << ") J " << tr.front().J << " -> " << tr.back().J;
  o.require(tr.size() <= 51 && red >= 100.0, "100x reduction");
  o.require(mono, "J non-increasing");
  g_lq_opt = res.policy;
  g_lq_opt_ready = true;
}

// 8. decoupled LQ against the Riccati solution
void riccati_check(Outcome& o) {
  const LQParams lp = fx::decoupled_lq();
  const auto model = make_lq_model(lp);
  const TimeGrid grid(kT, kM);
  const SimOptions sim{kN, kSeed, 1};
  const RiccatiSolution ric = riccati(lp, kT, kM);
  // phi(0) carried forward by an independent integrator lands on Phi
  const double back = oracle::riccati_forward(lp.b11(0.0), lp.s11(0.0), lp.b13(0.0), lp.s13(0.0), lp.R1, lp.R2,
                                              ric.phi.front(), kT);
  o.require(std::abs(back - lp.Phi) <= 1e-6, "riccati round trip");
  OptimizeOptions opt;
  opt.iters = 50;
  opt.rel_tol = 1e-3;
  const OptimizeResult res = pontryagin_descent(*model, unit_policy(*model), grid, sim, opt);
  const double J = res.trace.back().J;
  const double rel = std::abs(J - ric.J) / std::abs(ric.J);
  const ParticleCloud fin = simulate_self_consistent(*model, ControlSpec::closed_loop(res.policy), grid, sim);
  double num = 0.0, den = 0.0;
  for (int m = 0; m < kM; ++m) {
    double ux = 0.0, xx = 0.0;
    for (std::size_t i = 0; i < kN; ++i) {
      ux += fin.u(m, i)[0] * fin.x(m, i)[0];
      xx += fin.x(m, i)[0] * fin.x(m, i)[0];
    }
    const double g = ux / xx;
    num += grid.dt() * (g - ric.gain[m]) * (g - ric.gain[m]);
    den += grid.dt() * ric.gain[m] * ric.gain[m];
  }
  const double grel = std::sqrt(num / den);
  o.detail << " J=" << J << " J*=" << ric.J << " rel=" << rel << " gain_rel_L2=" << grel << " iters=" << res.trace.size() - 1;
  o.require(rel <= 0.02, "cost");
  o.require(grel <= 0.05, "gain");
}

// 9. no improving perturbation at the optimized LQ policy
void sufficiency(Outcome& o) {
  if (!g_lq_opt_ready) {
    Outcome tmp;
    descent(tmp);
  }
  const auto model = fx::builtin("lq");
  const ProbeReport pr = sufficiency_probe(*model, g_lq_opt, TimeGrid(kT, kM), {kN, kSeed, 1}, 20, {0.05, 0.1}, kSeed + 1);
  double worst = -1e300;
  for (const auto& r : pr.rows) worst = std::max(worst, (r.J_bar - r.J) / r.se_bar);
  o.detail << " rows=" << pr.rows.size() << " violations=" << pr.violations << " max (J_bar - J)/se=" << worst;
  o.require(pr.rows.size() == 40, "40 probes");
  o.require(pr.violations == 0, "violations");
}

// 10. rho against brute force, and the metric axioms
void rho(Outcome& o) {
  CounterRng r(2024, 0, 0, Stream::Probes);
  auto draw = [&](int max_atoms) {
    std::vector<std::pair<double, double>> v;
    const int n = 1 + static_cast<int>(r.uniform() * max_atoms);
    for (int i = 0; i < n; ++i) v.push_back({0.05 + r.uniform(), 4.0 * r.uniform() - 2.0});
    return v;
  };
  auto wm = [](const std::vector<std::pair<double, double>>& v) {
    WeightedMeasure mu(1);
    for (auto [w, x] : v) mu.add(w, {x});
    return mu;
  };
  double err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto a = draw(3), b = draw(3);
    err = std::max(err, std::abs(rho_distance(wm(a), wm(b)) - oracle::rho_bruteforce(a, b)));
  }
  double slack = -1e300, self = 0.0;
  bool sym = true;
  for (int t = 0; t < 100; ++t) {
    const auto a = wm(draw(10)), b = wm(draw(10)), c = wm(draw(10));
    const double ab = rho_distance(a, b), bc = rho_distance(b, c), ac = rho_distance(a, c);
    sym = sym && ab == rho_distance(b, a);
    slack = std::max(slack, ac - ab - bc);
    self = std::max(self, rho_distance(a, a));
  }
  o.detail << " max|lp - brute|=" << err << " triangle slack=" << slack << " symmetric=" << sym << " max rho(mu,mu)=" << self;
  o.require(err <= 1e-6, "brute force");
  o.require(sym, "symmetry");
  o.require(slack <= 1e-9, "triangle");
  o.require(self <= 1e-12, "identity");
}

// 11. derivative hygiene
void derivatives(Outcome& o) {
  for (const auto& name : kBuiltins) {
    const DerivativeReport rep = check_derivatives(*fx::builtin(name), 1e-6);
    o.detail << ' ' << name << ":" << rep.checks << "/" << rep.failures.size();
    o.require(rep.passed() && rep.checks > 0, name);
  }
  const DerivativeReport bad = check_derivatives(*make_planted_fault_model(fx::builtin("lq")), 1e-6);
  o.detail << " planted:" << bad.checks << "/" << bad.failures.size() << " (checks/failures)";
  o.require(!bad.passed(), "planted fault detected");
}

// 12. duality gap under step halving with common noise
void duality(Outcome& o) {
  const auto model = fx::builtin("lq");
  const ControlPolicy pol = unit_policy(*model);
  const ControlPolicy dir = random_direction(pol, kSeed, 0);
  auto gap = [&](int M, int refine) {
    const ParticleCloud b = cloud(*model, pol, M, refine);
    const AdjointCloud a = solve_adjoint(*model, b);
    return duality_check(*model, b, a, simulate_variational(*model, b, nullptr, dir));
  };
  const DualityReport coarse = gap(kM / 2, 2);
  const DualityReport fine = gap(kM, 1);
  o.detail << " M=" << kM / 2 << ": " << coarse.abs_diff << " (se " << coarse.se << ")  M=" << kM << ": " << fine.abs_diff
           << " (se " << fine.se << ")";
  o.require(fine.abs_diff < coarse.abs_diff, "gap decreases");
}

// 13. threads do not change artifacts
std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void determinism(Outcome& o) {
  namespace fs = std::filesystem;
  const std::string toy = "model.kind = toy\njumps.marks = [[0.2, 1.0], [-0.15, 0.5]]\ngrid.M = 16\nmc.N = 2000\n"
                          "optimizer.iters = 3\nrho.mu1 = [[0.6, -0.4], [0.5, 0.9]]\nrho.mu2 = [[1.2, 0.3]]\n";
  const std::string lq = "model.kind = lq\nmodel.lq.b11 = -0.3\nmodel.lq.b13 = -0.2\nmodel.lq.sigma11 = 0.2\n"
                         "model.lq.sigma13 = 0.5\nmodel.lq.R1 = 1\nmodel.lq.Phi = 1\nmodel.lq.decoupled_baseline = true\n"
                         "grid.M = 16\nmc.N = 2000\noptimizer.iters = 3\n";
  const fs::path root = fs::temp_directory_path() / "wmfc_acceptance_det";
  fs::remove_all(root);
  int files = 0;
  for (const auto& sub : subcommands()) {
    std::vector<std::string> arts[2];
    for (int k = 0; k < 2; ++k) {
      RunOptions ro;
      ro.subcommand = sub;
      ro.config_text = sub == "lq-verify" ? lq : toy;
      ro.threads = k == 0 ? 1 : 4;
      ro.out_dir = (root / (k == 0 ? "t1" : "t4")).string();
      ro.timestamp = "fixed";
      std::ostringstream out, err;
      const RunResult rr = run(ro, out, err);
      if (rr.exit_code == 2) o.require(false, sub + " config error: " + err.str());
      arts[k] = rr.artifacts;
    }
    if (arts[0].size() != arts[1].size() || arts[0].empty()) {
      o.require(false, sub + " artifact lists differ");
      continue;
    }
    for (std::size_t i = 0; i < arts[0].size(); ++i) {
      if (fs::path(arts[0][i]).extension() != ".csv") continue;
      ++files;
      if (slurp(arts[0][i]) != slurp(arts[1][i])) o.require(false, arts[0][i] + " differs");
    }
  }
  o.detail << ' ' << subcommands().size() << " subcommands, " << files << " CSVs compared at 1 vs 4 threads";
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "weight moments", weight_moments},
      {2, "weight martingale", weight_martingale},
      {3, "Picard fixed point", picard},
      {4, "linearization rate", linearization},
      {5, "variational convergence", variational},
      {6, "Gateaux three-way agreement", gateaux},
      {7, "SMP necessity (descent)", descent},
      {8, "Riccati equivalence", riccati_check},
      {9, "SMP sufficiency probe", sufficiency},
      {10, "rho metric", rho},
      {11, "gradient hygiene", derivatives},
      {12, "duality gap", duality},
      {13, "determinism across threads", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  set_threads(1);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s):%s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failed);
  return failed == 0 ? 0 : 1;
}
