#include "wmfc/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmfc/measure.hpp"
#include "wmfc/parallel.hpp"

namespace wmfc {

ControlSpec ControlSpec::closed_loop(const ControlPolicy& p, const ControlPolicy* dir, double eps) {
  ControlSpec s;
  s.policy = &p;
  s.direction = dir;
  s.eps = eps;
  return s;
}

ControlSpec ControlSpec::open_loop(const ParticleCloud& base, const std::vector<double>* v_path, double eps) {
  ControlSpec s;
  s.base = &base;
  s.v_path = v_path;
  s.eps = eps;
  return s;
}

void ControlSpec::control(int m, std::size_t i, double t, const double* x, double a, int k, double* u) const {
  if (policy) {
    policy->eval_raw(t, x, a, u);
    if (direction && eps != 0.0) {
      double v[16];
      direction->eval_raw(t, x, a, v);
      for (int c = 0; c < k; ++c) u[c] += eps * v[c];
    }
    policy->box().project(u, k);
    return;
  }
  if (!base) throw std::logic_error("ControlSpec: no control source");
  const double* ub = base->u(m, i);
  for (int c = 0; c < k; ++c) u[c] = ub[c];
  if (v_path && eps != 0.0) {
    const double* v = v_path->data() + (static_cast<std::size_t>(m) * base->N + i) * k;
    for (int c = 0; c < k; ++c) u[c] += eps * v[c];
  }
}

NoiseSource make_noise(const Model& model, const TimeGrid& grid, const SimOptions& opt) {
  return NoiseSource(opt.seed, model.dims().n, model.jumps().lambdas(), grid.T, grid.M * opt.refine);
}

namespace {

ParticleCloud allocate(const Model& model, const TimeGrid& grid, const SimOptions& opt) {
  const auto& D = model.dims();
  ParticleCloud c;
  c.grid = grid;
  c.N = opt.N;
  c.d = D.d;
  c.n = D.n;
  c.k = D.k;
  c.K = model.K();
  c.seed = opt.seed;
  c.refine = opt.refine;
  const std::size_t M = grid.M, N = opt.N;
  c.X.assign((M + 1) * N * D.d, 0.0);
  c.logA.assign((M + 1) * N, 0.0);
  c.A.assign((M + 1) * N, 0.0);
  c.U.assign(M * N * D.k, 0.0);
  c.flow = MeasureFlow(grid.M, model.J());
  const double la = std::log(model.a0());
  for (std::size_t i = 0; i < N; ++i) {
    std::copy(model.x0().begin(), model.x0().end(), c.x(0, i));
    c.logA[i] = la;
    c.A[i] = model.a0();
  }
  return c;
}

void step_all(const Model& model, const ControlSpec& ctl, const NoiseSource& noise, const double* feat, int m,
              ParticleCloud& c) {
  const int d = c.d, n = c.n, k = c.k, K = c.K;
  const double dt = c.grid.dt(), t = c.grid.t(m);
  const auto& marks = model.jumps().marks;
  const std::size_t N = c.N;
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    Coeffs co = model.make_coeffs();
    std::vector<double> dW(n);
    std::vector<int> dN(K);
    for (std::size_t i = b; i < e; ++i) {
      const double* x = c.x(m, i);
      const double a = c.a(m, i);
      double* u = c.u(m, i);
      ctl.control(m, i, t, x, a, k, u);
      co.zero();
      model.eval(t, x, a, feat, u, co, false);
      noise.increments(i, m, c.refine, dW.data(), dN.data());
      double* xn = c.x(m + 1, i);
      for (int l = 0; l < d; ++l) {
        double v = x[l] + co.b[l] * dt;
        for (int j = 0; j < n; ++j) v += co.sig[l * n + j] * dW[j];
        for (int q = 0; q < K; ++q) v += (dN[q] - marks[q].lambda * dt) * co.eta[q * d + l];
        xn[l] = v;
        if (!std::isfinite(v)) {
          std::ostringstream os;
          os << "forward: non-finite state at particle " << i << ", step " << m;
          throw DivergenceError(os.str());
        }
      }
      double beta2 = 0.0, bdw = 0.0;
      for (int j = 0; j < n; ++j) {
        beta2 += co.beta[j] * co.beta[j];
        bdw += co.beta[j] * dW[j];
      }
      double la = c.logA[static_cast<std::size_t>(m) * N + i] + (co.alpha - 0.5 * beta2) * dt + bdw;
      for (int q = 0; q < K; ++q) {
        const double g = co.gam[q];
        if (!(1.0 + g > 0.0)) {
          std::ostringstream os;
          os << "forward: 1 + gamma <= 0 at particle " << i << ", step " << m << ", mark " << q;
          throw DivergenceError(os.str());
        }
        if (dN[q] > 0) la += dN[q] * std::log1p(g);
        la -= marks[q].lambda * dt * g;
      }
      if (!std::isfinite(la)) {
        std::ostringstream os;
        os << "forward: non-finite weight at particle " << i << ", step " << m;
        throw DivergenceError(os.str());
      }
      c.logA[static_cast<std::size_t>(m + 1) * N + i] = la;
      c.A[static_cast<std::size_t>(m + 1) * N + i] = std::exp(la);
    }
  });
}

}  // namespace

void features_at(const Model& model, const ParticleCloud& c, int m, double* out) {
  const int J = model.J();
  if (J == 0) return;
  const std::size_t N = c.N;
  std::vector<double> v(N * J);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      for (int j = 0; j < J; ++j) {
        const double w = model.features()[j].kind == FeatureKind::Weighted ? c.a(m, i) : 1.0;
        v[i * J + j] = w * model.feature(j, c.x(m, i), nullptr);
      }
  });
  for (int j = 0; j < J; ++j) out[j] = ordered_sum(v.data() + j, N, J) / static_cast<double>(N);
}

MeasureFlow features_of(const Model& model, const ParticleCloud& c) {
  MeasureFlow f(c.grid.M, model.J());
  for (int m = 0; m <= c.grid.M; ++m) features_at(model, c, m, f.at(m));
  return f;
}

MeasureFlow initial_flow(const Model& model, const TimeGrid& grid) {
  MeasureFlow f(grid.M, model.J());
  std::vector<double> m0(model.J());
  for (int j = 0; j < model.J(); ++j) {
    const double w = model.features()[j].kind == FeatureKind::Weighted ? model.a0() : 1.0;
    m0[j] = w * model.feature(j, model.x0().data(), nullptr);
  }
  for (int m = 0; m <= grid.M; ++m) std::copy(m0.begin(), m0.end(), f.at(m));
  return f;
}

ParticleCloud simulate_forward(const Model& model, const ControlSpec& ctl, const MeasureFlow& flow,
                               const TimeGrid& grid, const SimOptions& opt) {
  if (flow.M != grid.M || flow.J != model.J()) throw std::invalid_argument("simulate_forward: flow does not cover grid");
  ParticleCloud c = allocate(model, grid, opt);
  c.flow = flow;
  const NoiseSource noise = make_noise(model, grid, opt);
  for (int m = 0; m < grid.M; ++m) step_all(model, ctl, noise, flow.at(m), m, c);
  return c;
}

ParticleCloud simulate_self_consistent(const Model& model, const ControlSpec& ctl, const TimeGrid& grid,
                                       const SimOptions& opt) {
  ParticleCloud c = allocate(model, grid, opt);
  const NoiseSource noise = make_noise(model, grid, opt);
  for (int m = 0; m < grid.M; ++m) {
    features_at(model, c, m, c.flow.at(m));
    step_all(model, ctl, noise, c.flow.at(m), m, c);
  }
  features_at(model, c, grid.M, c.flow.at(grid.M));
  return c;
}

double weight_moment_bound(const ParticleCloud& c, double p) {
  std::vector<double> s(c.N);
  for (std::size_t i = 0; i < c.N; ++i) {
    double mx = 0.0;
    for (int m = 0; m <= c.grid.M; ++m) mx = std::max(mx, c.a(m, i));
    s[i] = std::pow(mx, p);
  }
  return ordered_sum(s.data(), s.size()) / static_cast<double>(c.N);
}

PicardResult picard_measure_flow(const Model& model, const ControlSpec& ctl, const TimeGrid& grid,
                                 const SimOptions& opt, double tol, int max_iter, const MeasureFlow* init,
                                 double lpq_p, double lpq_q) {
  PicardResult res;
  MeasureFlow flow = init ? *init : initial_flow(model, grid);
  ParticleCloud prev = simulate_forward(model, ctl, flow, grid, opt);
  flow = features_of(model, prev);
  for (int it = 1; it <= max_iter; ++it) {
    ParticleCloud cur = simulate_forward(model, ctl, flow, grid, opt);
    MeasureFlow next = features_of(model, cur);
    double sup = 0.0;
    for (int m = 0; m <= grid.M; ++m) {
      double s = 0.0;
      for (int j = 0; j < model.J(); ++j) s += std::abs(next.at(m)[j] - flow.at(m)[j]);
      sup = std::max(sup, s);
    }
    res.trace.push_back({it, sup, lpq_p, lpq_q, lpq_distance(cur, prev, lpq_p, lpq_q)});
    prev = std::move(cur);
    if (sup <= tol) {
      // prev was simulated under `flow`, which reproduces itself within tol
      res.flow = std::move(flow);
      res.cloud = std::move(prev);
      res.iterations = it;
      res.converged = true;
      return res;
    }
    flow = std::move(next);
  }
  std::ostringstream os;
  os << "picard_measure_flow: no convergence within " << max_iter << " iterations (last delta "
     << (res.trace.empty() ? 0.0 : res.trace.back().sup_feature_delta) << ")";
  throw NonConvergenceError(os.str(), res.trace);
}

std::vector<double> particle_costs(const Model& model, const ParticleCloud& c) {
  const std::size_t N = c.N;
  const int M = c.grid.M;
  const double dt = c.grid.dt();
  std::vector<double> J(N);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    Coeffs co = model.make_coeffs();
    TerminalCoeffs tc = model.make_terminal();
    for (std::size_t i = b; i < e; ++i) {
      double s = 0.0;
      for (int m = 0; m < M; ++m) {
        co.zero();
        model.eval(c.grid.t(m), c.x(m, i), c.a(m, i), c.flow.at(m), c.u(m, i), co, false);
        s += co.f * dt;
      }
      tc.zero();
      model.terminal(c.x(M, i), c.a(M, i), c.flow.at(M), tc);
      s += tc.Phi;
      if (!std::isfinite(s)) {
        std::ostringstream os;
        os << "cost: non-finite sample at particle " << i;
        throw DivergenceError(os.str());
      }
      J[i] = s;
    }
  });
  return J;
}

TimeGrid::TimeGrid(double T_, int M_) : T(T_), M(M_) {
  if (!(T_ > 0.0) || M_ < 1) throw std::invalid_argument("TimeGrid: need T > 0 and M >= 1");
}

}  // namespace wmfc
