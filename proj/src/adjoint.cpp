#include "wmfc/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <sstream>

#include "wmfc/forward.hpp"
#include "wmfc/hamiltonian.hpp"
#include "wmfc/linalg.hpp"
#include "wmfc/parallel.hpp"
#include "wmfc/policy.hpp"

namespace wmfc {

namespace {

std::vector<std::string> basis_names(int d) {
  auto xn = [d](int l) { return d == 1 ? std::string("x") : "x" + std::to_string(l + 1); };
  std::vector<std::string> s{"1"};
  for (int l = 0; l < d; ++l) s.push_back(xn(l));
  s.push_back("a");
  for (int l = 0; l < d; ++l) s.push_back(xn(l) + "*a");
  for (int l = 0; l < d; ++l) s.push_back(xn(l) + "^2");
  s.push_back("a^2");
  return s;
}

// one regression history entry for pooled jump coefficients
struct PoolStep {
  std::vector<double> design;   // N*nb
  std::vector<double> targets;  // N*nc per mark, mark-major
};

}  // namespace

AdjointCloud solve_adjoint(const Model& model, const ParticleCloud& base, const AdjointOptions& opt) {
  const int M = base.grid.M, d = base.d, n = base.n, k = base.k, K = base.K, J = model.J();
  const std::size_t N = base.N;
  const double dt = base.grid.dt();
  const auto& marks = model.jumps().marks;
  const auto& feats = model.features();
  const int nc = 1 + d;  // p and the components of P
  const int nb = basis_size(BasisKind::Quadratic, d);
  if (opt.pairwise && N > 2048) throw std::invalid_argument("solve_adjoint: pairwise path limited to N <= 2048");

  AdjointCloud ac;
  ac.M = M;
  ac.N = N;
  ac.d = d;
  ac.n = n;
  ac.K = K;
  ac.p.assign(static_cast<std::size_t>(M + 1) * N, 0.0);
  ac.P.assign(static_cast<std::size_t>(M + 1) * N * d, 0.0);
  ac.q.assign(static_cast<std::size_t>(M) * N * n, 0.0);
  ac.Q.assign(static_cast<std::size_t>(M) * N * d * n, 0.0);
  ac.r.assign(static_cast<std::size_t>(M) * N * K, 0.0);
  ac.R.assign(static_cast<std::size_t>(M) * N * K * d, 0.0);
  ac.ph.assign(static_cast<std::size_t>(M) * N, 0.0);
  ac.Ph.assign(static_cast<std::size_t>(M) * N * d, 0.0);
  ac.basis = basis_names(d);

  // values at node m+1 in a particle-major (N x nc) buffer
  std::vector<double> ynext(N * nc), yhat(N * nc), yfirst(N * nc);

  // terminal conditions
  {
    std::vector<double> phim(N * std::max(J, 1), 0.0);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      TerminalCoeffs tc = model.make_terminal();
      for (std::size_t i = b; i < e; ++i) {
        tc.zero();
        model.terminal(base.x(M, i), base.a(M, i), base.flow.at(M), tc);
        ac.p[static_cast<std::size_t>(M) * N + i] = tc.Phi_a;
        for (int l = 0; l < d; ++l) ac.P[(static_cast<std::size_t>(M) * N + i) * d + l] = tc.Phi_x[l];
        for (int j = 0; j < J; ++j) phim[i * J + j] = tc.Phi_m[j];
      }
    });
    std::vector<double> h(J);
    bool any = false;
    for (int j = 0; j < J; ++j) {
      h[j] = ordered_sum(phim.data() + j, N, J) / static_cast<double>(N);
      any = any || h[j] != 0.0;
    }
    if (any) {
      parallel_for(N, [&](std::size_t b, std::size_t e) {
        std::vector<double> g(d);
        for (std::size_t i = b; i < e; ++i) {
          const double* x = base.x(M, i);
          const double a = base.a(M, i);
          double* P = ac.P.data() + (static_cast<std::size_t>(M) * N + i) * d;
          for (int j = 0; j < J; ++j) {
            if (h[j] == 0.0) continue;
            const double val = model.feature(j, x, g.data());
            const bool w = feats[j].kind == FeatureKind::Weighted;
            if (w) ac.p[static_cast<std::size_t>(M) * N + i] += h[j] * val;
            for (int l = 0; l < d; ++l) P[l] += h[j] * (w ? a : 1.0) * g[l];
          }
        }
      });
    }
  }

  // pooling windows per mark
  std::vector<int> window(K, 1);
  int wmax = 1;
  for (int q = 0; q < K; ++q) {
    const double ev = marks[q].lambda * dt * static_cast<double>(N);
    if (ev < opt.min_events) window[q] = static_cast<int>(std::ceil(opt.min_events / ev));
    window[q] = std::min(window[q], M);
    wmax = std::max(wmax, window[q]);
  }
  std::deque<PoolStep> history;

  const NoiseSource noise(base.seed, n, model.jumps().lambdas(), base.grid.T, M * base.refine);
  std::vector<double> design(N * nb), dW(N * n), dNc(N * std::max(K, 1)), target(N), fitted(N);
  std::vector<double> Z(N * nc * n), Rr(N * nc * std::max(K, 1));
  std::vector<double> Hx(N * d), Ha(N), Hm(N * std::max(J, 1)), res(N * nc), mart(N * nc);
  std::vector<int> cnt(std::max(K, 1));

  ac.diag.resize(M);
  for (int m = M - 1; m >= 0; --m) {
    const double t = base.grid.t(m);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      std::vector<double> w(n);
      std::vector<int> c(std::max(K, 1));
      for (std::size_t i = b; i < e; ++i) {
        eval_basis(BasisKind::Quadratic, d, base.x(m, i), base.a(m, i), design.data() + i * nb);
        ynext[i * nc] = ac.p[static_cast<std::size_t>(m + 1) * N + i];
        for (int l = 0; l < d; ++l) ynext[i * nc + 1 + l] = ac.P[(static_cast<std::size_t>(m + 1) * N + i) * d + l];
        noise.increments(i, m, base.refine, w.data(), c.data());
        for (int j = 0; j < n; ++j) dW[i * n + j] = w[j];
        for (int q = 0; q < K; ++q) dNc[i * K + q] = c[q] - marks[q].lambda * dt;
      }
    });

    const LeastSquares ls(design.data(), N, nb, opt.ridge);
    AdjointStepDiag& dg = ac.diag[m];
    dg.step = m;
    dg.cond_number = ls.cond();
    dg.rank = ls.rank();
    dg.dropped = ls.dropped();
    if (!ls.dropped().empty() && opt.strict) {
      std::ostringstream os;
      os << "solve_adjoint: rank-deficient regression at step " << m << " (rank " << ls.rank() << " of " << nb
         << "); drop basis functions:";
      for (int j : ls.dropped()) os << ' ' << ac.basis[j];
      throw ConditioningError(os.str());
    }

    // conditional expectations
    for (int c = 0; c < nc; ++c) {
      ls.predict(ls.fit(ynext.data() + c, nc), fitted.data());
      for (std::size_t i = 0; i < N; ++i) yhat[i * nc + c] = fitted[i];
    }
    // Brownian coefficients, with the fitted mean as control variate
    for (int c = 0; c < nc; ++c)
      for (int j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < N; ++i) target[i] = (ynext[i * nc + c] - yhat[i * nc + c]) * dW[i * n + j] / dt;
        ls.predict(ls.fit(target.data()), fitted.data());
        for (std::size_t i = 0; i < N; ++i) Z[(i * nc + c) * n + j] = fitted[i];
      }
    // jump coefficients, pooled over later steps when events are scarce
    PoolStep cur;
    if (wmax > 1) {
      cur.design = design;
      cur.targets.resize(static_cast<std::size_t>(K) * N * nc);
    }
    for (int q = 0; q < K; ++q) {
      const double ld = marks[q].lambda * dt;
      for (int c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < N; ++i) target[i] = (ynext[i * nc + c] - yhat[i * nc + c]) * dNc[i * K + q] / ld;
        if (wmax > 1)
          std::copy(target.begin(), target.end(), cur.targets.begin() + (static_cast<std::size_t>(q) * nc + c) * N);
        std::vector<double> coef;
        const int take = std::min<int>(window[q] - 1, static_cast<int>(history.size()));
        if (take == 0) {
          coef = ls.fit(target.data());
        } else {
          const std::size_t rows = N * (take + 1);
          std::vector<double> Xs(rows * nb), ys(rows);
          std::copy(design.begin(), design.end(), Xs.begin());
          std::copy(target.begin(), target.end(), ys.begin());
          for (int h = 0; h < take; ++h) {
            const PoolStep& ps = history[h];
            std::copy(ps.design.begin(), ps.design.end(), Xs.begin() + (h + 1) * N * nb);
            const auto src = ps.targets.begin() + (static_cast<std::size_t>(q) * nc + c) * N;
            std::copy(src, src + N, ys.begin() + (h + 1) * N);
          }
          const LeastSquares pooled(Xs.data(), rows, nb, opt.ridge);
          coef = pooled.fit(ys.data());
        }
        ls.predict(coef, fitted.data());
        for (std::size_t i = 0; i < N; ++i) Rr[(i * nc + c) * K + q] = fitted[i];
      }
    }
    if (wmax > 1) {
      history.push_front(std::move(cur));
      while (static_cast<int>(history.size()) > wmax - 1) history.pop_back();
    }

    // refit the means with the fitted martingale increment taken out of the target;
    // the increment has zero conditional mean, so this only removes regression noise
    // that would otherwise random-walk through the sweep. yfirst keeps the first fit
    // for the residual diagnostic, where an in-sample refit would make it trivially zero.
    std::copy(yhat.begin(), yhat.end(), yfirst.begin());
    for (int c = 0; c < nc; ++c) {
      for (std::size_t i = 0; i < N; ++i) {
        double inc = 0.0;
        for (int j = 0; j < n; ++j) inc += Z[(i * nc + c) * n + j] * dW[i * n + j];
        for (int q = 0; q < K; ++q) inc += Rr[(i * nc + c) * K + q] * dNc[i * K + q];
        target[i] = ynext[i * nc + c] - inc;
      }
      ls.predict(ls.fit(target.data()), fitted.data());
      for (std::size_t i = 0; i < N; ++i) yhat[i * nc + c] = fitted[i];
    }

    // store the step arrays
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const std::size_t s = static_cast<std::size_t>(m) * N + i;
        ac.ph[s] = yhat[i * nc];
        for (int l = 0; l < d; ++l) ac.Ph[s * d + l] = yhat[i * nc + 1 + l];
        for (int j = 0; j < n; ++j) ac.q[s * n + j] = Z[(i * nc) * n + j];
        for (int l = 0; l < d; ++l)
          for (int j = 0; j < n; ++j) ac.Q[(s * d + l) * n + j] = Z[(i * nc + 1 + l) * n + j];
        for (int q = 0; q < K; ++q) {
          ac.r[s * K + q] = Rr[(i * nc) * K + q];
          for (int l = 0; l < d; ++l) ac.R[(s * K + q) * d + l] = Rr[(i * nc + 1 + l) * K + q];
        }
        for (int c = 0; c < nc; ++c) {
          double inc = 0.0;
          for (int j = 0; j < n; ++j) inc += Z[(i * nc + c) * n + j] * dW[i * n + j];
          for (int q = 0; q < K; ++q) inc += Rr[(i * nc + c) * K + q] * dNc[i * K + q];
          res[i * nc + c] = ynext[i * nc + c] - yfirst[i * nc + c] - inc;
          mart[i * nc + c] = inc;
        }
      }
    });
    {
      std::vector<double> sq(N * nc);
      for (std::size_t i = 0; i < N * nc; ++i) sq[i] = res[i] * res[i];
      dg.residual_norm = std::sqrt(ordered_sum(sq.data(), sq.size()) / static_cast<double>(sq.size()));
      double worst = -1.0;
      std::vector<double> col(N), icol(N);
      for (int c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < N; ++i) {
          col[i] = res[i * nc + c];
          icol[i] = mart[i * nc + c];
        }
        const MeanStd ms = mean_stderr(col.data(), N);
        // the fitted intercept pins mean(y - yhat) to zero in sample, so the sample
        // mean of the residual is carried by the increment term; count its spread too
        const double se = std::hypot(ms.se, mean_stderr(icol.data(), N).se);
        const double z = se > 0.0 ? std::abs(ms.mean) / se : (ms.mean == 0.0 ? 0.0 : 1e300);
        if (z > worst) {
          worst = z;
          dg.residual_mean = ms.mean;
          dg.residual_se = se;
        }
      }
    }

    // Hamiltonian partials at theta_m with the step-m adjoint arguments
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      Coeffs co = model.make_coeffs();
      HamiltonianPartials hp(model);
      for (std::size_t i = b; i < e; ++i) {
        const std::size_t s = static_cast<std::size_t>(m) * N + i;
        co.zero();
        model.eval(t, base.x(m, i), base.a(m, i), base.flow.at(m), base.u(m, i), co, true);
        const AdjointArgs args{ac.ph.data() + s, ac.q.data() + s * n, ac.r.data() + s * K,
                               ac.Ph.data() + s * d, ac.Q.data() + s * d * n, ac.R.data() + s * K * d};
        hamiltonian_partials_from(model, co, base.a(m, i), args, hp);
        for (int l = 0; l < d; ++l) Hx[i * d + l] = hp.Hx[l];
        Ha[i] = hp.Ha;
        for (int j = 0; j < J; ++j) Hm[i * J + j] = hp.Hm[j];
      }
    });
    std::vector<double> h(J);
    for (int j = 0; j < J; ++j) h[j] = ordered_sum(Hm.data() + j, N, J) / static_cast<double>(N);

    parallel_for(N, [&](std::size_t b, std::size_t e) {
      std::vector<double> g(d), gw(d), gp(d);
      std::vector<double> pw(N), pp(N * d);
      for (std::size_t i = b; i < e; ++i) {
        const double* x = base.x(m, i);
        const double a = base.a(m, i);
        double dp = Ha[i];
        std::vector<double> dP(Hx.begin() + i * d, Hx.begin() + (i + 1) * d);
        if (opt.pairwise) {
          for (std::size_t ip = 0; ip < N; ++ip) {
            pw[ip] = model.mu_kernel(Hm.data() + ip * J, x, FeatureKind::Weighted);
            model.mu1_kernel(Hm.data() + ip * J, x, FeatureKind::Weighted, gw.data());
            model.mu1_kernel(Hm.data() + ip * J, x, FeatureKind::Plain, gp.data());
            for (int l = 0; l < d; ++l) pp[ip * d + l] = a * gw[l] + gp[l];
          }
          dp += ordered_sum(pw.data(), N) / static_cast<double>(N);
          for (int l = 0; l < d; ++l) dP[l] += ordered_sum(pp.data() + l, N, d) / static_cast<double>(N);
        } else {
          for (int j = 0; j < J; ++j) {
            if (h[j] == 0.0) continue;
            const double val = model.feature(j, x, g.data());
            const bool w = feats[j].kind == FeatureKind::Weighted;
            if (w) dp += h[j] * val;
            for (int l = 0; l < d; ++l) dP[l] += h[j] * (w ? a : 1.0) * g[l];
          }
        }
        const std::size_t s = static_cast<std::size_t>(m) * N + i;
        const double pv = ac.ph[s] + dt * dp;
        if (!std::isfinite(pv)) {
          std::ostringstream os;
          os << "solve_adjoint: non-finite driver at particle " << i << ", step " << m;
          throw DivergenceError(os.str());
        }
        ac.p[s] = pv;
        for (int l = 0; l < d; ++l) {
          const double Pv = ac.Ph[s * d + l] + dt * dP[l];
          if (!std::isfinite(Pv)) {
            std::ostringstream os;
            os << "solve_adjoint: non-finite driver at particle " << i << ", step " << m;
            throw DivergenceError(os.str());
          }
          ac.P[s * d + l] = Pv;
        }
      }
    });
  }
  (void)k;
  return ac;
}

std::vector<double> hamiltonian_u_path(const Model& model, const ParticleCloud& base, const AdjointCloud& ac) {
  const int M = base.grid.M, d = base.d, n = base.n, k = base.k, K = base.K;
  const std::size_t N = base.N;
  std::vector<double> out(static_cast<std::size_t>(M) * N * k);
  for (int m = 0; m < M; ++m) {
    const double t = base.grid.t(m);
    parallel_for(N, [&](std::size_t b, std::size_t e) {
      Coeffs co = model.make_coeffs();
      for (std::size_t i = b; i < e; ++i) {
        const std::size_t s = static_cast<std::size_t>(m) * N + i;
        co.zero();
        model.eval(t, base.x(m, i), base.a(m, i), base.flow.at(m), base.u(m, i), co, true);
        const AdjointArgs args{ac.ph.data() + s, ac.q.data() + s * n, ac.r.data() + s * K,
                               ac.Ph.data() + s * d, ac.Q.data() + s * d * n, ac.R.data() + s * K * d};
        hamiltonian_u_from(model, co, base.a(m, i), args, out.data() + s * k);
      }
    });
  }
  return out;
}

DualityReport duality_check(const Model& model, const ParticleCloud& base, const AdjointCloud& ac,
                            const VariationalCloud& var) {
  const int M = base.grid.M, d = base.d, n = base.n, k = base.k, K = base.K, J = model.J();
  const std::size_t N = base.N;
  const double dt = base.grid.dt();
  const auto& marks = model.jumps().marks;
  const std::vector<double> Hu = hamiltonian_u_path(model, base, ac);
  const NoiseSource noise(base.seed, n, model.jumps().lambdas(), base.grid.T, M * base.refine);
  std::vector<double> lhs(N), rhs(N), mart(N), gap(N);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    Coeffs co = model.make_coeffs();
    const int nch = n + K;
    std::vector<double> dW(n), xi(nch), var_xi(nch), ap(nch), fB(nch), aP(d * nch), fY(d * nch);
    std::vector<int> dN(K);
    for (std::size_t i = b; i < e; ++i) {
      double L = ac.p[static_cast<std::size_t>(M) * N + i] * var.b(M, i);
      const double* PT = ac.P_at(M, i);
      for (int l = 0; l < d; ++l) L += PT[l] * var.y(M, i)[l];
      lhs[i] = L;
      double s = 0.0, mg = 0.0;
      for (int m = 0; m < M; ++m) {
        const std::size_t o = static_cast<std::size_t>(m) * N + i;
        co.zero();
        model.eval(base.grid.t(m), base.x(m, i), base.a(m, i), base.flow.at(m), base.u(m, i), co, true);
        const double* v = var.vel(m, i);
        const double* y = var.y(m, i);
        const double* dm = var.dm.data() + static_cast<std::size_t>(m) * J;
        const double* hu = Hu.data() + o * k;
        const double Bm = var.b(m, i), a = base.a(m, i);
        double w = -co.f_a * Bm;
        for (int c = 0; c < k; ++c) w += (hu[c] - co.f_u[c]) * v[c];
        for (int l = 0; l < d; ++l) w -= co.f_x[l] * y[l];
        for (int j = 0; j < J; ++j) w -= co.f_m[j] * dm[j];
        s += dt * w;

        // martingale part of the increment of p B + <P, Y> over the step: first-order
        // terms in the noise xi plus the centred cross products of the two sides.
        // Every coefficient is known at t_m, so each term has mean zero.
        noise.increments(i, m, base.refine, dW.data(), dN.data());
        for (int j = 0; j < n; ++j) {
          xi[j] = dW[j];
          var_xi[j] = dt;
        }
        for (int q = 0; q < K; ++q) {
          xi[n + q] = dN[q] - marks[q].lambda * dt;
          var_xi[n + q] = marks[q].lambda * dt;
        }
        const double pm = ac.p[o];
        const double* Pm = ac.P_at(m, i);
        // adjoint side: ap (channel), aP (l * nch + channel); forward side: fB, fY likewise
        for (int j = 0; j < n; ++j) {
          ap[j] = ac.q[o * n + j];
          for (int l = 0; l < d; ++l) aP[l * nch + j] = ac.Q[(o * d + l) * n + j];
          double db = 0.0;
          for (int jj = 0; jj < J; ++jj) db += co.beta_m[j * J + jj] * dm[jj];
          for (int l = 0; l < d; ++l) db += co.beta_x[j * d + l] * y[l];
          for (int cc = 0; cc < k; ++cc) db += co.beta_u[j * k + cc] * v[cc];
          fB[j] = a * db + Bm * co.beta[j];
          for (int l = 0; l < d; ++l) {
            const int r = l * n + j;
            double ds = 0.0;
            for (int jj = 0; jj < J; ++jj) ds += co.sig_m[r * J + jj] * dm[jj];
            for (int ll = 0; ll < d; ++ll) ds += co.sig_x[r * d + ll] * y[ll];
            for (int cc = 0; cc < k; ++cc) ds += co.sig_u[r * k + cc] * v[cc];
            fY[l * nch + j] = ds;
          }
        }
        for (int q = 0; q < K; ++q) {
          const int ch = n + q;
          ap[ch] = ac.r[o * K + q];
          for (int l = 0; l < d; ++l) aP[l * nch + ch] = ac.R[(o * K + q) * d + l];
          double dg = 0.0;
          for (int l = 0; l < d; ++l) dg += co.gam_x[q * d + l] * y[l];
          for (int cc = 0; cc < k; ++cc) dg += co.gam_u[q * k + cc] * v[cc];
          fB[ch] = co.gam[q] * Bm + a * dg;
          for (int l = 0; l < d; ++l) {
            const int r = q * d + l;
            double de = 0.0;
            for (int ll = 0; ll < d; ++ll) de += co.eta_x[r * d + ll] * y[ll];
            for (int cc = 0; cc < k; ++cc) de += co.eta_u[r * k + cc] * v[cc];
            fY[l * nch + ch] = de;
          }
        }
        for (int c1 = 0; c1 < nch; ++c1) {
          double c = Bm * ap[c1] + pm * fB[c1];
          for (int l = 0; l < d; ++l) c += y[l] * aP[l * nch + c1] + Pm[l] * fY[l * nch + c1];
          mg += c * xi[c1];
          for (int c2 = 0; c2 < nch; ++c2) {
            double cc = ap[c1] * fB[c2];
            for (int l = 0; l < d; ++l) cc += aP[l * nch + c1] * fY[l * nch + c2];
            mg += cc * (xi[c1] * xi[c2] - (c1 == c2 ? var_xi[c1] : 0.0));
          }
        }
      }
      rhs[i] = s;
      mart[i] = mg;
      gap[i] = L - mg - s;
    }
  });
  DualityReport rep;
  const double inv = 1.0 / static_cast<double>(N);
  rep.lhs = ordered_sum(lhs.data(), N) * inv;
  rep.rhs = ordered_sum(rhs.data(), N) * inv;
  rep.martingale = ordered_sum(mart.data(), N) * inv;
  const MeanStd g = mean_stderr(gap.data(), N);
  rep.abs_diff = std::abs(g.mean);
  rep.se = g.se;
  return rep;
}

void write_adjoint_csv(std::ostream& os, const AdjointCloud& ac, std::size_t max_particles) {
  const std::size_t N = std::min(ac.N, max_particles);
  os << "step,particle,p";
  for (int j = 0; j < ac.n; ++j) os << ",q" << j;
  for (int q = 0; q < ac.K; ++q) os << ",r" << q;
  for (int l = 0; l < ac.d; ++l) os << ",P" << l;
  for (int l = 0; l < ac.d; ++l)
    for (int j = 0; j < ac.n; ++j) os << ",Q" << l << '_' << j;
  for (int q = 0; q < ac.K; ++q)
    for (int l = 0; l < ac.d; ++l) os << ",R" << q << '_' << l;
  os << '\n' << std::setprecision(17);
  for (int m = 0; m <= ac.M; ++m)
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t s = static_cast<std::size_t>(m) * ac.N + i;
      const bool last = m == ac.M;
      os << m << ',' << i << ',' << ac.p[s];
      for (int j = 0; j < ac.n; ++j) os << ',' << (last ? 0.0 : ac.q[s * ac.n + j]);
      for (int q = 0; q < ac.K; ++q) os << ',' << (last ? 0.0 : ac.r[s * ac.K + q]);
      for (int l = 0; l < ac.d; ++l) os << ',' << ac.P[s * ac.d + l];
      for (int l = 0; l < ac.d * ac.n; ++l) os << ',' << (last ? 0.0 : ac.Q[s * ac.d * ac.n + l]);
      for (int l = 0; l < ac.K * ac.d; ++l) os << ',' << (last ? 0.0 : ac.R[s * ac.K * ac.d + l]);
      os << '\n';
    }
}

void write_adjoint_diagnostics(std::ostream& os, const AdjointCloud& ac) {
  os << "step,cond_number,residual_norm\n" << std::setprecision(17);
  for (const auto& d : ac.diag) os << d.step << ',' << d.cond_number << ',' << d.residual_norm << '\n';
}

}  // namespace wmfc
