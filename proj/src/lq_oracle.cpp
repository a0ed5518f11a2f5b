#include "wmfc/lq_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wmfc {

double weight_mean(const LQParams& p, double t) { return p.a * std::exp(p.alpha * t); }

namespace {

// breakpoints of all coefficients inside (0, t)
std::vector<double> breakpoints(const LQParams& p, double t) {
  std::vector<double> s{0.0, t};
  for (const PiecewiseConstant* f : {&p.b11, &p.b12, &p.b13, &p.s11, &p.s12, &p.s13})
    for (double k : f->knots)
      if (k > 0.0 && k < t) s.push_back(k);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace

double mean_flow(const LQParams& p, double t) {
  const auto s = breakpoints(p, t);
  double logm = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double t0 = s[i], h = s[i + 1] - s[i], mid = 0.5 * (s[i] + s[i + 1]);
    const double c1 = p.alpha + p.b11(mid) + p.s11(mid) * p.beta;
    const double c2 = p.b12(mid) + p.s12(mid) * p.beta;
    // integral of a e^{alpha s} over the piece
    const double ea = p.alpha == 0.0 ? p.a * h : p.a * std::exp(p.alpha * t0) * std::expm1(p.alpha * h) / p.alpha;
    logm += c1 * h + c2 * ea;
  }
  return p.x * p.a * std::exp(logm);
}

RiccatiSolution riccati(const LQParams& p, double T, int M, int substeps) {
  if (!p.decoupled()) throw std::invalid_argument("riccati: needs b12 = s12 = alpha = beta = 0 and a = 1");
  if (!(p.R2 > 0.0)) throw std::invalid_argument("riccati: needs R2 > 0");
  auto rhs = [&](double t, double phi) {
    const double b11 = p.b11(t), b13 = p.b13(t), s11 = p.s11(t), s13 = p.s13(t);
    const double den = p.R2 + phi * s13 * s13;
    if (!(den > 0.0)) {
      std::ostringstream os;
      os << "riccati: R2 + phi sigma13^2 <= 0 at t = " << t;
      throw HorizonError(os.str());
    }
    const double c = b13 + s11 * s13;
    // phi' = -(...)
    return -((2.0 * b11 + s11 * s11) * phi + p.R1 - phi * phi * c * c / den);
  };
  auto gain = [&](double t, double phi) {
    const double s13 = p.s13(t);
    return -phi * (p.b13(t) + p.s11(t) * p.s13(t)) / (p.R2 + phi * s13 * s13);
  };
  RiccatiSolution sol;
  sol.t.resize(M + 1);
  sol.phi.resize(M + 1);
  sol.gain.resize(M + 1);
  double phi = p.Phi;
  sol.t[M] = T;
  sol.phi[M] = phi;
  const double H = T / M, h = H / substeps;
  for (int m = M - 1; m >= 0; --m) {
    // coefficients are evaluated inside the sub-interval so RK4 stays on one piece
    const double tl = T * m / M;
    for (int s = substeps - 1; s >= 0; --s) {
      const double t1 = tl + (s + 1) * h;
      const double tm = t1 - 0.5 * h, t0 = t1 - h;
      const double te = std::nextafter(t1, tl);  // left-continuous read at the right end
      const double k1 = rhs(te, phi);
      const double k2 = rhs(tm, phi - 0.5 * h * k1);
      const double k3 = rhs(tm, phi - 0.5 * h * k2);
      const double k4 = rhs(std::max(t0, tl), phi - h * k3);
      phi -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!std::isfinite(phi) || std::abs(phi) > 1e12) {
        std::ostringstream os;
        os << "riccati: blow-up before t = " << t0;
        throw HorizonError(os.str());
      }
    }
    sol.t[m] = tl;
    sol.phi[m] = phi;
  }
  for (int m = 0; m <= M; ++m) sol.gain[m] = gain(std::min(sol.t[m], std::nextafter(T, 0.0)), sol.phi[m]);
  sol.J = sol.phi[0] * p.x * p.x;
  return sol;
}

}  // namespace wmfc
