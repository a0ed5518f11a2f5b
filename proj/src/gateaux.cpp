#include "wmfc/gateaux.hpp"

#include <cmath>

#include "wmfc/parallel.hpp"
#include "wmfc/variational.hpp"

namespace wmfc {

GateauxResult summarize(std::vector<double> samples) {
  GateauxResult r;
  const MeanStd ms = mean_stderr(samples.data(), samples.size());
  r.value = ms.mean;
  r.se = ms.se;
  r.samples = std::move(samples);
  return r;
}

GateauxResult gateaux_adjoint(const Model& model, const ParticleCloud& base, const std::vector<double>& Hu,
                              const std::vector<double>& v) {
  const int M = base.grid.M, k = base.k;
  const std::size_t N = base.N;
  const double dt = base.grid.dt();
  (void)model;
  std::vector<double> s(N);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double acc = 0.0;
      for (int m = 0; m < M; ++m) {
        const std::size_t o = (static_cast<std::size_t>(m) * N + i) * k;
        for (int c = 0; c < k; ++c) acc += dt * Hu[o + c] * v[o + c];
      }
      s[i] = acc;
    }
  });
  return summarize(std::move(s));
}

GateauxResult gateaux_variational(const Model& model, const ParticleCloud& base, const ControlPolicy& direction) {
  const VariationalCloud vc = simulate_variational(model, base, nullptr, direction, {});
  const int M = base.grid.M, d = base.d, k = base.k, J = model.J();
  const std::size_t N = base.N;
  const double dt = base.grid.dt();
  std::vector<double> s(N);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    Coeffs co = model.make_coeffs();
    TerminalCoeffs tc = model.make_terminal();
    for (std::size_t i = b; i < e; ++i) {
      double acc = 0.0;
      for (int m = 0; m < M; ++m) {
        co.zero();
        model.eval(base.grid.t(m), base.x(m, i), base.a(m, i), base.flow.at(m), base.u(m, i), co, true);
        double w = co.f_a * vc.b(m, i);
        for (int l = 0; l < d; ++l) w += co.f_x[l] * vc.y(m, i)[l];
        for (int j = 0; j < J; ++j) w += co.f_m[j] * vc.dm[static_cast<std::size_t>(m) * J + j];
        for (int c = 0; c < k; ++c) w += co.f_u[c] * vc.vel(m, i)[c];
        acc += dt * w;
      }
      tc.zero();
      model.terminal(base.x(M, i), base.a(M, i), base.flow.at(M), tc);
      acc += tc.Phi_a * vc.b(M, i);
      for (int l = 0; l < d; ++l) acc += tc.Phi_x[l] * vc.y(M, i)[l];
      for (int j = 0; j < J; ++j) acc += tc.Phi_m[j] * vc.dm[static_cast<std::size_t>(M) * J + j];
      s[i] = acc;
    }
  });
  return summarize(std::move(s));
}

GateauxResult gateaux_fd(const Model& model, const ParticleCloud& base, const std::vector<double>& v, double eps) {
  const SimOptions so{base.N, base.seed, base.refine};
  const std::vector<double> J0 = particle_costs(model, base);
  auto quotient = [&](double e) {
    const ParticleCloud pc = simulate_self_consistent(model, ControlSpec::open_loop(base, &v, e), base.grid, so);
    const std::vector<double> J1 = particle_costs(model, pc);
    std::vector<double> s(base.N);
    for (std::size_t i = 0; i < base.N; ++i) s[i] = (J1[i] - J0[i]) / e;
    return s;
  };
  GateauxResult r = summarize(quotient(eps));
  const std::vector<double> half = quotient(0.5 * eps);
  // forward difference bias is linear in eps: FD(eps) - FD(eps/2) is half of it
  r.trunc = 2.0 * std::abs(r.value - ordered_sum(half.data(), half.size()) / static_cast<double>(half.size()));
  return r;
}

GateauxResult gateaux_derivative(const Model& model, const ControlPolicy& policy_bar, const ControlPolicy& direction,
                                 const TimeGrid& grid, const SimOptions& sim, GateauxMode mode, double eps,
                                 const AdjointOptions& aopt) {
  const ParticleCloud base = simulate_self_consistent(model, ControlSpec::closed_loop(policy_bar), grid, sim);
  switch (mode) {
    case GateauxMode::Adjoint: {
      const AdjointCloud adj = solve_adjoint(model, base, aopt);
      return gateaux_adjoint(model, base, hamiltonian_u_path(model, base, adj), direction_path(direction, base));
    }
    case GateauxMode::Variational:
      return gateaux_variational(model, base, direction);
    case GateauxMode::FD:
      break;
  }
  return gateaux_fd(model, base, direction_path(direction, base), eps);
}

double smp_residual(const Model& model, const ParticleCloud& base, const AdjointCloud& adj,
                    const ControlPolicy& policy_bar) {
  return smp_residual(base, hamiltonian_u_path(model, base, adj), policy_bar);
}

double smp_residual(const ParticleCloud& base, const std::vector<double>& Hu, const ControlPolicy& policy_bar) {
  const int M = base.grid.M, k = base.k;
  const std::size_t N = base.N;
  const double dt = base.grid.dt();
  const ControlBox& box = policy_bar.box();
  std::vector<double> s(N);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    std::vector<double> w(k);
    for (std::size_t i = b; i < e; ++i) {
      double acc = 0.0;
      for (int m = 0; m < M; ++m) {
        const std::size_t o = (static_cast<std::size_t>(m) * N + i) * k;
        const double* u = base.u(m, i);
        for (int c = 0; c < k; ++c) w[c] = u[c] - Hu[o + c];
        box.project(w.data(), k);
        for (int c = 0; c < k; ++c) {
          const double r = u[c] - w[c];
          acc += dt * r * r;
        }
      }
      s[i] = acc;
    }
  });
  return std::sqrt(ordered_sum(s.data(), N) / static_cast<double>(N));
}

}  // namespace wmfc
