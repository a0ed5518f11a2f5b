#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "wmfc/adjoint.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/gateaux.hpp"
#include "wmfc/hamiltonian.hpp"
#include "wmfc/optimize.hpp"

using namespace wmfc;

namespace {

HamiltonianInputs random_inputs(const Model& model, std::mt19937_64& g) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  HamiltonianInputs in = HamiltonianInputs::zeros(model);
  in.t = 0.3;
  in.a = 1.0 + 0.5 * U(g);
  for (auto* v : {&in.x, &in.m, &in.u, &in.p, &in.q, &in.r, &in.P, &in.Q, &in.R})
    for (double& e : *v) e = U(g);
  return in;
}

}  // namespace

TEST_CASE("H reduces to f when every adjoint vanishes") {
  for (const auto& name : builtin_model_names()) {
    const auto model = fx::builtin(name);
    std::mt19937_64 g(1);
    HamiltonianInputs in = random_inputs(*model, g);
    for (auto* v : {&in.p, &in.q, &in.r, &in.P, &in.Q, &in.R}) std::fill(v->begin(), v->end(), 0.0);
    Coeffs c = model->make_coeffs();
    c.zero();
    model->eval(in.t, in.x.data(), in.a, in.m.data(), in.u.data(), c, false);
    INFO(name);
    CHECK(hamiltonian(*model, in) == c.f);
  }
}

TEST_CASE("LQ Hamiltonian in closed form") {
  const auto p = fx::coupled_lq();
  const auto model = make_lq_model(p);
  std::mt19937_64 g(2);
  for (int rep = 0; rep < 20; ++rep) {
    const HamiltonianInputs in = random_inputs(*model, g);
    const double x = in.x[0], m = in.m[0], u = in.u[0];
    const double b = p.b11(0.0) * x + p.b12(0.0) * m + p.b13(0.0) * u;
    const double s = p.s11(0.0) * x + p.s12(0.0) * m + p.s13(0.0) * u;
    const double H = in.a * (in.p[0] * p.alpha + in.q[0] * p.beta) + in.P[0] * b + in.Q[0] * s + p.R1 * x * x +
                     p.R2 * u * u;
    CHECK(hamiltonian(*model, in) == doctest::Approx(H).epsilon(1e-13));
    const HamiltonianPartials hp = hamiltonian_partials(*model, in);
    CHECK(hp.Hu[0] == doctest::Approx(in.P[0] * p.b13(0.0) + in.Q[0] * p.s13(0.0) + 2.0 * p.R2 * u).epsilon(1e-13));
    CHECK(hp.Hx[0] == doctest::Approx(in.P[0] * p.b11(0.0) + in.Q[0] * p.s11(0.0) + 2.0 * p.R1 * x).epsilon(1e-13));
    CHECK(hp.Ha == doctest::Approx(in.p[0] * p.alpha + in.q[0] * p.beta).epsilon(1e-13));
    const double Hm = in.P[0] * p.b12(0.0) + in.Q[0] * p.s12(0.0);
    CHECK(hp.Hm[0] == doctest::Approx(Hm).epsilon(1e-13));
    const double xp = 0.7;
    CHECK(hamiltonian_mu(*model, hp, &xp) == doctest::Approx(Hm * xp).epsilon(1e-13));
    double g1 = 0.0;
    hamiltonian_mu1(*model, hp, &xp, &g1);
    CHECK(g1 == doctest::Approx(Hm).epsilon(1e-13));
  }
}

TEST_CASE("partials agree with central differences") {
  for (const auto& name : builtin_model_names()) {
    const auto model = fx::builtin(name);
    std::mt19937_64 g(3);
    for (int rep = 0; rep < 10; ++rep) {
      const HamiltonianInputs in = random_inputs(*model, g);
      const HamiltonianPartials hp = hamiltonian_partials(*model, in);
      const double h = 1e-5;
      auto fd = [&](auto&& bump) {
        HamiltonianInputs up = in, dn = in;
        bump(up, h);
        bump(dn, -h);
        return (hamiltonian(*model, up) - hamiltonian(*model, dn)) / (2.0 * h);
      };
      INFO(name << " probe " << rep);
      for (std::size_t l = 0; l < in.x.size(); ++l)
        CHECK(hp.Hx[l] == doctest::Approx(fd([&](HamiltonianInputs& z, double e) { z.x[l] += e; })).epsilon(1e-6).scale(1.0));
      CHECK(hp.Ha == doctest::Approx(fd([](HamiltonianInputs& z, double e) { z.a += e; })).epsilon(1e-6).scale(1.0));
      for (std::size_t c = 0; c < in.u.size(); ++c)
        CHECK(hp.Hu[c] == doctest::Approx(fd([&](HamiltonianInputs& z, double e) { z.u[c] += e; })).epsilon(1e-6).scale(1.0));
      for (std::size_t j = 0; j < in.m.size(); ++j)
        CHECK(hp.Hm[j] == doctest::Approx(fd([&](HamiltonianInputs& z, double e) { z.m[j] += e; })).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("input dimensions are checked") {
  const auto model = fx::builtin("toy2d");
  HamiltonianInputs in = HamiltonianInputs::zeros(*model);
  in.x.pop_back();
  CHECK_THROWS_AS(hamiltonian(*model, in), std::invalid_argument);
}

TEST_CASE("stationarity residual") {
  const auto model = make_trivial_model();
  const TimeGrid grid(2.0, 8);
  const ControlPolicy pol = ControlPolicy::constant(1, 1, 0.5, 2.0);
  const ParticleCloud base = simulate_self_consistent(*model, ControlSpec::closed_loop(pol), grid, {50, 1, 1});
  std::vector<double> Hu(base.U.size(), -0.3);
  // unbounded: the L2(dt x dP) norm of H_u
  CHECK(smp_residual(base, Hu, pol) == doctest::Approx(0.3 * std::sqrt(2.0)));
  std::fill(Hu.begin(), Hu.end(), 0.0);
  CHECK(smp_residual(base, Hu, pol) == 0.0);

  // u sits on the upper face and H_u pushes outward: stationary in the box
  ControlPolicy boxed = ControlPolicy::constant(1, 1, 0.5, 2.0, ControlBox::uniform(1, -1.0, 0.5));
  const ParticleCloud b2 = simulate_self_consistent(*model, ControlSpec::closed_loop(boxed), grid, {50, 1, 1});
  std::fill(Hu.begin(), Hu.end(), -2.0);
  CHECK(smp_residual(b2, Hu, boxed) == 0.0);
  // pushing inward by 0.2 leaves a defect 0.2
  std::fill(Hu.begin(), Hu.end(), 0.2);
  CHECK(smp_residual(b2, Hu, boxed) == doctest::Approx(0.2 * std::sqrt(2.0)));
  // inward push beyond the far face is clipped at the width of the box
  std::fill(Hu.begin(), Hu.end(), 5.0);
  CHECK(smp_residual(b2, Hu, boxed) == doctest::Approx(1.5 * std::sqrt(2.0)));
}

TEST_CASE("trivial model: every Gateaux route gives 2 u0 T") {
  const auto model = make_trivial_model();
  const double T = 1.5, u0 = 0.4;
  const TimeGrid grid(T, 16);
  const ControlPolicy pol = ControlPolicy::constant(1, 1, u0, T);
  const ControlPolicy dir = ControlPolicy::constant(1, 1, 1.0, T);
  const SimOptions sim{200, 1, 1};
  for (GateauxMode mode : {GateauxMode::Adjoint, GateauxMode::Variational, GateauxMode::FD}) {
    const GateauxResult r = gateaux_derivative(*model, pol, dir, grid, sim, mode);
    CHECK(r.value == doctest::Approx(2.0 * u0 * T).epsilon(mode == GateauxMode::FD ? 1e-3 : 1e-9));
  }
  const ControlPolicy zero = dir.axpy(-1.0, dir);
  for (GateauxMode mode : {GateauxMode::Adjoint, GateauxMode::Variational, GateauxMode::FD})
    CHECK(gateaux_derivative(*model, pol, zero, grid, sim, mode).value == 0.0);
}

TEST_CASE("Gateaux routes agree on the weighted models") {
  for (const char* name : {"lq", "toy", "mean_variance"}) {
    const auto model = fx::builtin(name);
    const ControlPolicy pol = ControlPolicy::constant(1, 1, 0.3, 1.0);
    const TimeGrid grid(1.0, 32);
    const SimOptions sim{20000, 2, 1};
    const ParticleCloud base = simulate_self_consistent(*model, ControlSpec::closed_loop(pol), grid, sim);
    const AdjointCloud adj = solve_adjoint(*model, base);
    const std::vector<double> Hu = hamiltonian_u_path(*model, base, adj);
    for (int k = 0; k < 2; ++k) {
      const ControlPolicy dir = random_direction(pol, 3, k);
      const std::vector<double> vp = direction_path(dir, base);
      const GateauxResult ga = gateaux_adjoint(*model, base, Hu, vp);
      const GateauxResult gv = gateaux_variational(*model, base, dir);
      const GateauxResult gf = gateaux_fd(*model, base, vp, 1e-4);
      const double fd_err = std::hypot(gf.se, gf.trunc);
      INFO(name << " dir " << k << " adj " << ga.value << " var " << gv.value << " fd " << gf.value);
      CHECK(std::abs(ga.value - gf.value) <= 3.0 * std::hypot(ga.se, fd_err));
      CHECK(std::abs(gv.value - gf.value) <= 3.0 * std::hypot(gv.se, fd_err));
    }
  }
}
