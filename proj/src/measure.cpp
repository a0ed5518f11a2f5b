#include "wmfc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "wmfc/parallel.hpp"

namespace wmfc {

WeightedMeasure::WeightedMeasure(int d, std::vector<Atom> atoms) : d_(d) {
  for (auto& a : atoms) add(a.weight, std::move(a.x));
}

void WeightedMeasure::add(double w, std::vector<double> x) {
  if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("WeightedMeasure: weights must be positive");
  if (static_cast<int>(x.size()) != d_) throw std::invalid_argument("WeightedMeasure: atom dimension mismatch");
  atoms_.push_back({w, std::move(x)});
}

WeightedMeasure WeightedMeasure::from_cloud(const ParticleCloud& c, int m) {
  WeightedMeasure mu(c.d);
  mu.atoms_.reserve(c.N);
  const double inv = 1.0 / static_cast<double>(c.N);
  for (std::size_t i = 0; i < c.N; ++i) {
    const double* xi = c.x(m, i);
    mu.add(c.a(m, i) * inv, std::vector<double>(xi, xi + c.d));
  }
  return mu;
}

double WeightedMeasure::total_mass() const {
  std::vector<double> w(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) w[i] = atoms_[i].weight;
  return ordered_sum(w.data(), w.size());
}

double pairing(const WeightedMeasure& mu, const TestFunction& f) {
  const auto& at = mu.atoms();
  std::vector<double> v(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double fi = f(at[i].x);
    if (!std::isfinite(fi)) throw std::domain_error("pairing: non-finite test function value at atom " + std::to_string(i));
    v[i] = at[i].weight * fi;
  }
  return ordered_sum(v.data(), v.size());
}

double simplex_max(const std::vector<double>& A, const std::vector<double>& b, const std::vector<double>& c,
                   int rows, int cols, std::vector<double>* s) {
  const int W = cols + rows + 1;  // structural, slack, rhs
  std::vector<double> T(static_cast<std::size_t>(rows + 1) * W, 0.0);
  auto at = [&](int r, int j) -> double& { return T[static_cast<std::size_t>(r) * W + j]; };
  for (int r = 0; r < rows; ++r) {
    if (b[r] < 0.0) throw std::logic_error("simplex_max: negative right-hand side");
    for (int j = 0; j < cols; ++j) at(r, j) = A[static_cast<std::size_t>(r) * cols + j];
    at(r, cols + r) = 1.0;
    at(r, W - 1) = b[r];
  }
  for (int j = 0; j < cols; ++j) at(rows, j) = c[j];  // reduced costs, objective value in rhs slot (negated)
  std::vector<int> basis(rows);
  for (int r = 0; r < rows; ++r) basis[r] = cols + r;

  const double eps = 1e-12;
  const int max_iter = 50 * (rows + cols) + 1000;
  int stall = 0;
  double last_obj = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const bool bland = stall > 50;
    int e = -1;
    double best = eps;
    for (int j = 0; j < W - 1; ++j) {
      const double rc = at(rows, j);
      if (rc > eps) {
        if (bland) {
          e = j;
          break;
        }
        if (rc > best) {
          best = rc;
          e = j;
        }
      }
    }
    if (e < 0) break;
    int lv = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows; ++r) {
      const double a = at(r, e);
      if (a > eps) {
        const double q = at(r, W - 1) / a;
        if (q < ratio - 1e-15 || (std::abs(q - ratio) <= 1e-15 && lv >= 0 && basis[r] < basis[lv])) {
          ratio = q;
          lv = r;
        }
      }
    }
    if (lv < 0) throw std::runtime_error("simplex_max: unbounded program");
    const double piv = at(lv, e);
    for (int j = 0; j < W; ++j) at(lv, j) /= piv;
    for (int r = 0; r <= rows; ++r) {
      if (r == lv) continue;
      const double f = at(r, e);
      if (f == 0.0) continue;
      for (int j = 0; j < W; ++j) at(r, j) -= f * at(lv, j);
    }
    basis[lv] = e;
    const double obj = -at(rows, W - 1);
    stall = (obj > last_obj + 1e-14) ? 0 : stall + 1;
    last_obj = std::max(last_obj, obj);
    if (it == max_iter - 1) throw std::runtime_error("simplex_max: iteration limit");
  }
  if (s) {
    s->assign(cols, 0.0);
    for (int r = 0; r < rows; ++r)
      if (basis[r] < cols) (*s)[basis[r]] = at(r, W - 1);
  }
  return -at(rows, W - 1);
}

double rho_distance(const WeightedMeasure& mu1, const WeightedMeasure& mu2, std::size_t cap) {
  if (mu1.dim() != 1 || mu2.dim() != 1) throw std::invalid_argument("rho_distance: only d = 1 is supported");
  if (cap > kRhoMaxCap) cap = kRhoMaxCap;
  struct P {
    double x, c;
  };
  std::vector<P> pts;
  for (const auto& a : mu1.atoms()) pts.push_back({a.x[0], a.weight});
  for (const auto& a : mu2.atoms()) pts.push_back({a.x[0], -a.weight});
  std::sort(pts.begin(), pts.end(), [](const P& l, const P& r) { return l.x < r.x; });
  std::vector<double> p, c;
  for (const auto& q : pts) {
    if (!p.empty() && q.x == p.back())
      c.back() += q.c;
    else {
      p.push_back(q.x);
      c.push_back(q.c);
    }
  }
  const int n = static_cast<int>(p.size());
  if (static_cast<std::size_t>(n) > cap)
    throw std::length_error("rho_distance: union support " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
  if (n == 0) return 0.0;

  // shift s_k = f_k + L_k so the origin is feasible
  std::vector<double> L(n);
  for (int k = 0; k < n; ++k) L[k] = 1.0 + std::abs(p[k]);
  const int rows = 2 * (n - 1) + n;
  std::vector<double> A(static_cast<std::size_t>(rows) * n, 0.0), b(rows);
  int r = 0;
  for (int k = 0; k + 1 < n; ++k) {
    const double gap = p[k + 1] - p[k];
    A[static_cast<std::size_t>(r) * n + k] = 1.0;
    A[static_cast<std::size_t>(r) * n + k + 1] = -1.0;
    b[r++] = std::max(0.0, gap + L[k] - L[k + 1]);
    A[static_cast<std::size_t>(r) * n + k] = -1.0;
    A[static_cast<std::size_t>(r) * n + k + 1] = 1.0;
    b[r++] = std::max(0.0, gap + L[k + 1] - L[k]);
  }
  for (int k = 0; k < n; ++k) {
    A[static_cast<std::size_t>(r) * n + k] = 1.0;
    b[r++] = 2.0 * L[k];
  }
  double best = 0.0;
  for (double sign : {1.0, -1.0}) {
    std::vector<double> cs(n);
    double off = 0.0;
    for (int k = 0; k < n; ++k) {
      cs[k] = sign * c[k];
      off -= sign * c[k] * L[k];
    }
    const double v = simplex_max(A, b, cs, rows, n) + off;
    best = std::max(best, v);
  }
  return best;
}

double lpq_distance(const ParticleCloud& c1, const ParticleCloud& c2, double p, double q) {
  if (c1.N != c2.N || c1.grid.M != c2.grid.M || c1.d != c2.d || c1.grid.T != c2.grid.T)
    throw std::invalid_argument("lpq_distance: clouds differ in shape");
  const std::size_t N = c1.N;
  const int M = c1.grid.M, d = c1.d;
  std::vector<double> sx(N), sa(N);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double mx = 0.0, ma = 0.0;
      for (int m = 0; m <= M; ++m) {
        const double* x1 = c1.x(m, i);
        const double* x2 = c2.x(m, i);
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += (x1[l] - x2[l]) * (x1[l] - x2[l]);
        mx = std::max(mx, std::sqrt(s));
        ma = std::max(ma, std::abs(c1.a(m, i) - c2.a(m, i)));
      }
      sx[i] = std::pow(mx, p);
      sa[i] = std::pow(ma, q);
    }
  });
  const double ex = ordered_sum(sx.data(), N) / static_cast<double>(N);
  const double ea = ordered_sum(sa.data(), N) / static_cast<double>(N);
  return ex + std::pow(ea, p / q);
}

void write_measure_csv(std::ostream& os, const WeightedMeasure& mu) {
  os << "weight";
  for (int l = 0; l < mu.dim(); ++l) os << ",x_" << (l + 1);
  os << '\n';
  char buf[64];
  for (const auto& a : mu.atoms()) {
    std::snprintf(buf, sizeof buf, "%.17g", a.weight);
    os << buf;
    for (double v : a.x) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}


}  // namespace wmfc
