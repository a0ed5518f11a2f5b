#include "wmfc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmfc/gateaux.hpp"
#include "wmfc/linalg.hpp"
#include "wmfc/rng.hpp"

namespace wmfc {

ControlPolicy expand_policy(const ControlPolicy& p, int M, BasisKind basis) {
  const int k = p.k(), d = p.d();
  const double T = p.horizon();
  if (p.mode() == PolicyMode::OpenLoopGrid) {
    std::vector<double> vals(static_cast<std::size_t>(M) * k);
    for (int m = 0; m < M; ++m) {
      const int src = p.node(T * m / M);
      for (int c = 0; c < k; ++c) vals[static_cast<std::size_t>(m) * k + c] = p.params()[static_cast<std::size_t>(src) * k + c];
    }
    return ControlPolicy::open_loop(k, d, T, M, std::move(vals), p.box());
  }
  const int nb = basis_size(basis, d), nbp = p.nb();
  const int shared = std::min(nb, nbp);  // Default is a prefix of Quadratic
  std::vector<double> theta(static_cast<std::size_t>(M) * k * nb, 0.0);
  for (int m = 0; m < M; ++m) {
    const int src = p.node(T * m / M);
    for (int c = 0; c < k; ++c)
      for (int j = 0; j < shared; ++j)
        theta[(static_cast<std::size_t>(m) * k + c) * nb + j] = p.params()[(static_cast<std::size_t>(src) * k + c) * nbp + j];
  }
  return ControlPolicy::feedback(k, d, T, M, basis, std::move(theta), p.box());
}

MeanStd evaluate_cost(const Model& model, const ControlPolicy& policy, const TimeGrid& grid, const SimOptions& sim) {
  const ParticleCloud c = simulate_self_consistent(model, ControlSpec::closed_loop(policy), grid, sim);
  const std::vector<double> J = particle_costs(model, c);
  return mean_stderr(J.data(), J.size());
}

namespace {

// fit the targets u*(m,i) per node onto the policy's parametrization
ControlPolicy fit_policy(const ControlPolicy& like, const ParticleCloud& base, const std::vector<double>& target) {
  const int M = base.grid.M, k = base.k, d = base.d;
  const std::size_t N = base.N;
  ControlPolicy out = like;
  auto& th = out.params();
  if (like.mode() == PolicyMode::OpenLoopGrid) {
    for (int m = 0; m < M; ++m)
      for (int c = 0; c < k; ++c)
        th[static_cast<std::size_t>(m) * k + c] =
            ordered_sum(target.data() + static_cast<std::size_t>(m) * N * k + c, N, k) / static_cast<double>(N);
    return out;
  }
  const int nb = like.nb();
  std::vector<double> design(N * nb);
  for (int m = 0; m < M; ++m) {
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) eval_basis(like.basis(), d, base.x(m, i), base.a(m, i), design.data() + i * nb);
    });
    const LeastSquares ls(design.data(), N, nb);
    for (int c = 0; c < k; ++c) {
      const std::vector<double> coef = ls.fit(target.data() + static_cast<std::size_t>(m) * N * k + c, k);
      std::copy(coef.begin(), coef.end(), th.begin() + (static_cast<std::size_t>(m) * k + c) * nb);
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) { return ordered_sum(v.data(), v.size()) / static_cast<double>(v.size()); }

}  // namespace

OptimizeResult pontryagin_descent(const Model& model, const ControlPolicy& init, const TimeGrid& grid,
                                  const SimOptions& sim, const OptimizeOptions& opt) {
  if (init.horizon() != grid.T) throw std::invalid_argument("pontryagin_descent: policy horizon differs from grid");
  const int M = grid.M, k = model.dims().k;
  const double dt = grid.dt();
  const std::size_t N = sim.N;
  OptimizeResult res;
  ControlPolicy policy = expand_policy(init, M, opt.basis);
  ParticleCloud base = simulate_self_consistent(model, ControlSpec::closed_loop(policy), grid, sim);
  std::vector<double> Jp = particle_costs(model, base);
  double step = opt.step;
  int stalls = 0, last_bt = 0;
  for (int it = 0;; ++it) {
    const MeanStd J = mean_stderr(Jp.data(), N);
    const AdjointCloud adj = solve_adjoint(model, base, opt.adjoint);
    const std::vector<double> Hu = hamiltonian_u_path(model, base, adj);
    const double hn = smp_residual(base, Hu, policy);
    res.trace.push_back({it, J.mean, J.se, hn, step, last_bt});
    if (hn <= opt.tol || hn <= opt.rel_tol * res.trace.front().Hu_norm) {
      res.converged = true;
      break;
    }
    if (it >= opt.iters) break;

    double s = step;
    bool accepted = false;
    int bt = 0;
    for (; bt <= opt.max_backtracks; ++bt, s *= 0.5) {
      std::vector<double> target(base.U.size());
      parallel_for(N, [&](std::size_t b, std::size_t e) {
        for (int m = 0; m < M; ++m)
          for (std::size_t i = b; i < e; ++i) {
            const std::size_t o = (static_cast<std::size_t>(m) * N + i) * k;
            for (int c = 0; c < k; ++c) target[o + c] = base.U[o + c] - s * Hu[o + c];
            policy.box().project(target.data() + o, k);
          }
      });
      ControlPolicy cand = fit_policy(policy, base, target);
      // predicted first-order change along the base path
      std::vector<double> pr(N);
      parallel_for(N, [&](std::size_t b, std::size_t e) {
        std::vector<double> u(k);
        for (std::size_t i = b; i < e; ++i) {
          double acc = 0.0;
          for (int m = 0; m < M; ++m) {
            const std::size_t o = (static_cast<std::size_t>(m) * N + i) * k;
            cand.eval(grid.t(m), base.x(m, i), base.a(m, i), u.data());
            for (int c = 0; c < k; ++c) acc += dt * Hu[o + c] * (u[c] - base.U[o + c]);
          }
          pr[i] = acc;
        }
      });
      const double dpred = mean_of(pr);
      ParticleCloud cc = simulate_self_consistent(model, ControlSpec::closed_loop(cand), grid, sim);
      std::vector<double> Jc = particle_costs(model, cc);
      if (mean_of(Jc) <= J.mean + opt.armijo_c * dpred) {
        policy = std::move(cand);
        base = std::move(cc);
        Jp = std::move(Jc);
        accepted = true;
        break;
      }
    }
    last_bt = bt;
    if (accepted) {
      stalls = 0;
      step = std::min(opt.step, 2.0 * s);
    } else {
      step = s;
      if (++stalls >= opt.stall_limit) {
        std::ostringstream os;
        os << "pontryagin_descent: line search exhausted " << stalls << " times in a row at iteration " << it;
        throw StallError(os.str(), res.trace);
      }
    }
  }
  res.policy = std::move(policy);
  return res;
}

ControlPolicy random_direction(const ControlPolicy& like, std::uint64_t seed, int index) {
  CounterRng rng(seed, static_cast<std::uint64_t>(index), 0, Stream::Directions);
  const int k = like.k(), d = like.d();
  if (like.mode() == PolicyMode::OpenLoopGrid) {
    std::vector<double> v(k);
    for (auto& x : v) x = rng.normal();
    return ControlPolicy::open_loop(k, d, like.horizon(), 1, std::move(v));
  }
  std::vector<double> th(static_cast<std::size_t>(k) * like.nb());
  for (auto& x : th) x = rng.normal();
  return ControlPolicy::feedback(k, d, like.horizon(), 1, like.basis(), std::move(th));
}

ProbeReport sufficiency_probe(const Model& model, const ControlPolicy& policy, const TimeGrid& grid,
                              const SimOptions& sim, int num_dirs, const std::vector<double>& eps_list,
                              std::uint64_t dir_seed) {
  ProbeReport rep;
  const ParticleCloud base = simulate_self_consistent(model, ControlSpec::closed_loop(policy), grid, sim);
  const std::vector<double> J0 = particle_costs(model, base);
  const MeanStd m0 = mean_stderr(J0.data(), J0.size());
  for (int dir = 0; dir < num_dirs; ++dir) {
    const ControlPolicy v = random_direction(policy, dir_seed, dir);
    for (double eps : eps_list) {
      const ParticleCloud pc = simulate_self_consistent(model, ControlSpec::closed_loop(policy, &v, eps), grid, sim);
      const std::vector<double> J1 = particle_costs(model, pc);
      std::vector<double> diff(J1.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = J1[i] - J0[i];
      const MeanStd m1 = mean_stderr(J1.data(), J1.size());
      const MeanStd md = mean_stderr(diff.data(), diff.size());
      ProbeRow row{dir, eps, m1.mean, m0.mean, m0.se, md.mean, md.se, m1.mean < m0.mean - 3.0 * m0.se};
      if (row.violation) ++rep.violations;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace wmfc
