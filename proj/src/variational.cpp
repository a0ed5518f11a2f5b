#include "wmfc/variational.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmfc/parallel.hpp"

namespace wmfc {

std::vector<double> direction_path(const ControlPolicy& v, const ParticleCloud& base) {
  const int M = base.grid.M, k = base.k;
  const std::size_t N = base.N;
  std::vector<double> out(static_cast<std::size_t>(M) * N * k);
  for (int m = 0; m < M; ++m) {
    const double t = base.grid.t(m);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        v.eval_raw(t, base.x(m, i), base.a(m, i), out.data() + (static_cast<std::size_t>(m) * N + i) * k);
    });
  }
  return out;
}

namespace {

// first-order feature change at node m from (Y, B): weighted g B + A grad g . Y, plain grad g . Y
void feature_variation(const Model& model, const ParticleCloud& base, const VariationalCloud& vc, int m,
                       double* out) {
  const int J = model.J(), d = base.d;
  if (J == 0) return;
  const std::size_t N = base.N;
  std::vector<double> s(N * J);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    std::vector<double> g(d);
    for (std::size_t i = b; i < e; ++i) {
      const double* y = vc.y(m, i);
      for (int j = 0; j < J; ++j) {
        const double val = model.feature(j, base.x(m, i), g.data());
        double gy = 0.0;
        for (int l = 0; l < d; ++l) gy += g[l] * y[l];
        s[i * J + j] = model.features()[j].kind == FeatureKind::Weighted ? val * vc.b(m, i) + base.a(m, i) * gy : gy;
      }
    }
  });
  for (int j = 0; j < J; ++j) out[j] = ordered_sum(s.data() + j, N, J) / static_cast<double>(N);
}

}  // namespace

VariationalCloud simulate_variational(const Model& model, const ParticleCloud& base, const ControlPolicy* policy_bar,
                                      const ControlPolicy& direction, const VariationalOptions& opt) {
  if (opt.mode == Perturbation::ClosedLoop && !policy_bar)
    throw std::invalid_argument("simulate_variational: closed-loop mode needs the base policy");
  if (opt.pairwise && base.N > opt.pairwise_cap) {
    std::ostringstream os;
    os << "simulate_variational: pairwise path limited to N <= " << opt.pairwise_cap << " (got " << base.N << ")";
    throw std::invalid_argument(os.str());
  }
  const int M = base.grid.M, d = base.d, n = base.n, k = base.k, K = base.K, J = model.J();
  const std::size_t N = base.N;
  const double dt = base.grid.dt();
  const auto& marks = model.jumps().marks;

  VariationalCloud vc;
  vc.M = M;
  vc.N = N;
  vc.d = d;
  vc.k = k;
  vc.J = J;
  vc.Y.assign(static_cast<std::size_t>(M + 1) * N * d, 0.0);
  vc.Btilde.assign(static_cast<std::size_t>(M + 1) * N, 0.0);
  vc.B.assign(static_cast<std::size_t>(M + 1) * N, 0.0);
  vc.dm.assign(static_cast<std::size_t>(M + 1) * J, 0.0);
  vc.v.assign(static_cast<std::size_t>(M) * N * k, 0.0);

  const NoiseSource noise(base.seed, n, model.jumps().lambdas(), base.grid.T, M * base.refine);

  for (int m = 0; m < M; ++m) {
    const double t = base.grid.t(m);
    double* dm = vc.dm.data() + static_cast<std::size_t>(m) * J;
    feature_variation(model, base, vc, m, dm);

    parallel_for(N, [&](std::size_t b, std::size_t e) {
      Coeffs co = model.make_coeffs();
      std::vector<double> dW(n), v(k), ux(k * d), ua(k), raw(k), at(J), g(d), g1(d);
      std::vector<int> dN(K);
      // sum_j row[j] dm_j, or its pairwise kernel form
      auto meas = [&](const double* row) {
        if (!opt.pairwise) {
          double s = 0.0;
          for (int j = 0; j < J; ++j) s += row[j] * dm[j];
          return s;
        }
        std::vector<double> terms(N);
        for (std::size_t ip = 0; ip < N; ++ip) {
          const double* xp = base.x(m, ip);
          const double* yp = vc.y(m, ip);
          model.mu1_kernel(row, xp, FeatureKind::Weighted, g.data());
          model.mu1_kernel(row, xp, FeatureKind::Plain, g1.data());
          double s = vc.b(m, ip) * model.mu_kernel(row, xp, FeatureKind::Weighted);
          for (int l = 0; l < d; ++l) s += (base.a(m, ip) * g[l] + g1[l]) * yp[l];
          terms[ip] = s;
        }
        return ordered_sum(terms.data(), N) / static_cast<double>(N);
      };

      for (std::size_t i = b; i < e; ++i) {
        const double* x = base.x(m, i);
        const double a = base.a(m, i);
        const double* y = vc.y(m, i);
        const std::size_t idx = static_cast<std::size_t>(m) * N + i;
        const double Bm = vc.B[idx];

        if (opt.mode == Perturbation::OpenLoop) {
          direction.eval_raw(t, x, a, v.data());
        } else {
          direction.eval_raw(t, x, a, v.data());
          policy_bar->eval_grad(t, x, a, ux.data(), ua.data());
          policy_bar->eval_raw(t, x, a, raw.data());
          const ControlBox& box = policy_bar->box();
          for (int c = 0; c < k; ++c) {
            double s = v[c] + ua[c] * Bm;
            for (int l = 0; l < d; ++l) s += ux[c * d + l] * y[l];
            // clamped components do not respond to first order
            if (box.bounded && (raw[c] < box.lo[c] || raw[c] > box.hi[c])) s = 0.0;
            v[c] = s;
          }
        }
        std::copy(v.begin(), v.end(), vc.v.begin() + idx * k);

        co.zero();
        model.eval(t, x, a, base.flow.at(m), base.u(m, i), co, true);
        noise.increments(i, m, base.refine, dW.data(), dN.data());

        double* yn = vc.Y.data() + (static_cast<std::size_t>(m + 1) * N + i) * d;
        for (int l = 0; l < d; ++l) {
          double drift = meas(co.b_m.data() + l * J);
          for (int ll = 0; ll < d; ++ll) drift += co.b_x[l * d + ll] * y[ll];
          for (int c = 0; c < k; ++c) drift += co.b_u[l * k + c] * v[c];
          double s = y[l] + drift * dt;
          for (int j = 0; j < n; ++j) {
            const int r = l * n + j;
            double w = meas(co.sig_m.data() + r * J);
            for (int ll = 0; ll < d; ++ll) w += co.sig_x[r * d + ll] * y[ll];
            for (int c = 0; c < k; ++c) w += co.sig_u[r * k + c] * v[c];
            s += w * dW[j];
          }
          for (int q = 0; q < K; ++q) {
            const int r = q * d + l;
            double w = 0.0;
            for (int ll = 0; ll < d; ++ll) w += co.eta_x[r * d + ll] * y[ll];
            for (int c = 0; c < k; ++c) w += co.eta_u[r * k + c] * v[c];
            s += (dN[q] - marks[q].lambda * dt) * w;
          }
          yn[l] = s;
        }

        // log-weight: alpha~ = alpha - |beta|^2/2 differentiates to alpha_h - sum_j beta_j beta_j,h
        for (int jj = 0; jj < J; ++jj) {
          double s = co.alpha_m[jj];
          for (int j = 0; j < n; ++j) s -= co.beta[j] * co.beta_m[j * J + jj];
          at[jj] = s;
        }
        double drift = meas(at.data());
        for (int l = 0; l < d; ++l) {
          double s = co.alpha_x[l];
          for (int j = 0; j < n; ++j) s -= co.beta[j] * co.beta_x[j * d + l];
          drift += s * y[l];
        }
        for (int c = 0; c < k; ++c) {
          double s = co.alpha_u[c];
          for (int j = 0; j < n; ++j) s -= co.beta[j] * co.beta_u[j * k + c];
          drift += s * v[c];
        }
        double bt = vc.Btilde[idx] + drift * dt;
        for (int j = 0; j < n; ++j) {
          double w = meas(co.beta_m.data() + j * J);
          for (int l = 0; l < d; ++l) w += co.beta_x[j * d + l] * y[l];
          for (int c = 0; c < k; ++c) w += co.beta_u[j * k + c] * v[c];
          bt += w * dW[j];
        }
        for (int q = 0; q < K; ++q) {
          double w = 0.0;
          for (int l = 0; l < d; ++l) w += co.gam_x[q * d + l] * y[l];
          for (int c = 0; c < k; ++c) w += co.gam_u[q * k + c] * v[c];
          bt += (dN[q] / (1.0 + co.gam[q]) - marks[q].lambda * dt) * w;
        }
        const std::size_t nidx = static_cast<std::size_t>(m + 1) * N + i;
        vc.Btilde[nidx] = bt;
        vc.B[nidx] = base.A[nidx] * bt;
        if (!std::isfinite(bt)) {
          std::ostringstream os;
          os << "variational: non-finite value at particle " << i << ", step " << m;
          throw DivergenceError(os.str());
        }
      }
    });
  }
  feature_variation(model, base, vc, M, vc.dm.data() + static_cast<std::size_t>(M) * J);
  return vc;
}

ParticleCloud perturbed_cloud(const Model& model, const ParticleCloud& base, const ControlPolicy& policy_bar,
                              const ControlPolicy& direction, const std::vector<double>* v_path, double eps,
                              Perturbation mode) {
  SimOptions so{base.N, base.seed, base.refine};
  if (mode == Perturbation::ClosedLoop)
    return simulate_self_consistent(model, ControlSpec::closed_loop(policy_bar, &direction, eps), base.grid, so);
  return simulate_self_consistent(model, ControlSpec::open_loop(base, v_path, eps), base.grid, so);
}

double linearization_error(const ParticleCloud& pert, const ParticleCloud& base) {
  const std::size_t N = base.N;
  const int d = base.d;
  std::vector<double> s(N);
  for (std::size_t i = 0; i < N; ++i) {
    double mx = 0.0;
    for (int m = 0; m <= base.grid.M; ++m) {
      double e = 0.0;
      for (int l = 0; l < d; ++l) {
        const double dx = pert.x(m, i)[l] - base.x(m, i)[l];
        e += dx * dx;
      }
      mx = std::max(mx, e);
    }
    s[i] = mx;
  }
  return ordered_sum(s.data(), N) / static_cast<double>(N);
}

ConvergenceReport convergence_check(const Model& model, const ParticleCloud& base, const ControlPolicy& policy_bar,
                                    const ControlPolicy& direction, const std::vector<double>& eps_list,
                                    const VariationalOptions& opt, double q) {
  const VariationalCloud vc = simulate_variational(model, base, &policy_bar, direction, opt);
  std::vector<double> vpath;
  if (opt.mode == Perturbation::OpenLoop) vpath = direction_path(direction, base);
  const std::size_t N = base.N;
  const int d = base.d, M = base.grid.M;
  ConvergenceReport rep;
  for (double eps : eps_list) {
    const ParticleCloud pc = perturbed_cloud(model, base, policy_bar, direction, &vpath, eps, opt.mode);
    std::vector<double> sx(N), sa(N);
    for (std::size_t i = 0; i < N; ++i) {
      double mx = 0.0, ma = 0.0;
      for (int m = 0; m <= M; ++m) {
        double e = 0.0;
        for (int l = 0; l < d; ++l) {
          const double r = (pc.x(m, i)[l] - base.x(m, i)[l]) / eps - vc.y(m, i)[l];
          e += r * r;
        }
        mx = std::max(mx, e);
        ma = std::max(ma, std::abs((pc.a(m, i) - base.a(m, i)) / eps - vc.b(m, i)));
      }
      sx[i] = mx;
      sa[i] = std::pow(ma, q);
    }
    ConvergenceRow row;
    row.eps = eps;
    row.err_X = ordered_sum(sx.data(), N) / static_cast<double>(N);
    row.err_A = std::pow(ordered_sum(sa.data(), N) / static_cast<double>(N), 2.0 / q);
    row.D = row.err_X + row.err_A;
    rep.rows.push_back(row);
  }
  rep.decreasing = rep.rows.size() >= 2;
  for (std::size_t r = 1; r < rep.rows.size(); ++r)
    if (!(rep.rows[r].D < rep.rows[r - 1].D)) rep.decreasing = false;
  return rep;
}

}  // namespace wmfc
