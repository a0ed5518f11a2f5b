#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace oracle {

double weight_moment(double a, double alpha, const std::vector<double>& beta, const std::vector<wmfc::Mark>& marks,
                     double p, double T) {
  double b2 = 0.0;
  for (double b : beta) b2 += b * b;
  double rate = p * alpha + 0.5 * p * (p - 1.0) * b2;
  for (const auto& mk : marks) rate += mk.lambda * (std::pow(1.0 + mk.z, p) - 1.0 - p * mk.z);
  return std::pow(a, p) * std::exp(rate * T);
}

double rho_bruteforce(const std::vector<std::pair<double, double>>& mu1,
                      const std::vector<std::pair<double, double>>& mu2) {
  std::map<double, double> c;  // net weight per support point
  for (auto [w, x] : mu1) c[x] += w;
  for (auto [w, x] : mu2) c[x] -= w;
  std::vector<double> pts, cw;
  for (auto [x, w] : c) {
    pts.push_back(x);
    cw.push_back(w);
  }
  const int K = static_cast<int>(pts.size());
  // At a vertex every f(p_k) is tied by a chain of tight adjacent Lipschitz
  // constraints to some point sitting on its bound, so
  //   f(p_k) = +-(1 + |p_j|) + sum over the gaps between j and k of +-gap.
  std::vector<std::vector<double>> cand(K);
  for (int j = 0; j < K; ++j)
    for (double s0 : {-1.0, 1.0}) {
      const double base = s0 * (1.0 + std::abs(pts[j]));
      for (int k = 0; k < K; ++k) {
        const int lo = std::min(j, k), hi = std::max(j, k), ng = hi - lo;
        for (int mask = 0; mask < (1 << ng); ++mask) {
          double v = base;
          for (int g = 0; g < ng; ++g) v += ((mask >> g) & 1 ? 1.0 : -1.0) * (pts[lo + g + 1] - pts[lo + g]);
          if (std::abs(v) <= 1.0 + std::abs(pts[k]) + 1e-12) cand[k].push_back(v);
        }
      }
    }
  for (auto& v : cand) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-13; }), v.end());
  }
  auto best_for = [&](double sign) {
    const double NEG = -std::numeric_limits<double>::infinity();
    std::vector<double> val(cand[0].size());
    for (std::size_t a = 0; a < cand[0].size(); ++a) val[a] = sign * cw[0] * cand[0][a];
    for (int k = 1; k < K; ++k) {
      const double gap = pts[k] - pts[k - 1];
      std::vector<double> nv(cand[k].size(), NEG);
      for (std::size_t b = 0; b < cand[k].size(); ++b)
        for (std::size_t a = 0; a < cand[k - 1].size(); ++a)
          if (std::abs(cand[k][b] - cand[k - 1][a]) <= gap + 1e-12 && val[a] > NEG)
            nv[b] = std::max(nv[b], val[a] + sign * cw[k] * cand[k][b]);
      val = std::move(nv);
    }
    return *std::max_element(val.begin(), val.end());
  };
  return std::max(best_for(1.0), best_for(-1.0));
}

double textbook_lq_cost(double R1, double R2, double Phi, double x0, double T, int steps) {
  // state (x, lambda, cost); u = -lambda / (2 R2); lambda' = -2 R1 x
  auto shoot = [&](double lam0, double* xT, double* lamT) {
    double y[3] = {x0, lam0, 0.0};
    const double h = T / steps;
    auto f = [&](const double* s, double* o) {
      const double u = -s[1] / (2.0 * R2);
      o[0] = u;
      o[1] = -2.0 * R1 * s[0];
      o[2] = R1 * s[0] * s[0] + R2 * u * u;
    };
    for (int i = 0; i < steps; ++i) {
      double k1[3], k2[3], k3[3], k4[3], t[3];
      f(y, k1);
      for (int j = 0; j < 3; ++j) t[j] = y[j] + 0.5 * h * k1[j];
      f(t, k2);
      for (int j = 0; j < 3; ++j) t[j] = y[j] + 0.5 * h * k2[j];
      f(t, k3);
      for (int j = 0; j < 3; ++j) t[j] = y[j] + h * k3[j];
      f(t, k4);
      for (int j = 0; j < 3; ++j) y[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    }
    *xT = y[0];
    *lamT = y[1];
    return y[2];
  };
  // the terminal mismatch lambda(T) - 2 Phi x(T) is affine in lambda(0)
  double xa, la, xb, lb;
  shoot(0.0, &xa, &la);
  shoot(1.0, &xb, &lb);
  const double ra = la - 2.0 * Phi * xa, rb = lb - 2.0 * Phi * xb;
  const double lam0 = -ra / (rb - ra);
  double xT, lT;
  const double run = shoot(lam0, &xT, &lT);
  return run + Phi * xT * xT;
}

double mean_flow_rk4(double alpha, double beta, double b11, double b12, double s11, double s12, double x, double a,
                     double t, int steps) {
  const double c1 = alpha + b11 + s11 * beta, c2 = b12 + s12 * beta;
  auto f = [&](double s, double m) { return c1 * m + c2 * a * std::exp(alpha * s) * m; };
  double m = x * a, s = 0.0;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i, s += h) {
    const double k1 = f(s, m), k2 = f(s + 0.5 * h, m + 0.5 * h * k1), k3 = f(s + 0.5 * h, m + 0.5 * h * k2),
                 k4 = f(s + h, m + h * k3);
    m += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return m;
}

double euler_second_moment(double b, double s, double x, double T, int M) {
  const double dt = T / M;
  double m2 = x * x;
  for (int i = 0; i < M; ++i) m2 *= (1.0 + b * dt) * (1.0 + b * dt) + s * s * dt;
  return m2;
}

double riccati_forward(double b11, double s11, double b13, double s13, double R1, double R2, double phi0, double T,
                       int steps) {
  const double c = b13 + s11 * s13;
  auto f = [&](double p) { return -((2.0 * b11 + s11 * s11) * p + R1 - p * p * c * c / (R2 + p * s13 * s13)); };
  double p = phi0;
  const double h = T / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(p), k2 = f(p + 0.5 * h * k1), k3 = f(p + 0.5 * h * k2), k4 = f(p + h * k3);
    p += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return p;
}

}  // namespace oracle
