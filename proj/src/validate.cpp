#include "wmfc/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmfc/measure.hpp"
#include "wmfc/rng.hpp"

namespace wmfc {

bool HypothesisReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const HypothesisRow& r) { return r.pass; });
}

std::string DerivativeReport::summary() const {
  std::ostringstream os;
  os << checks << " checks, " << failures.size() << " failures";
  if (!failures.empty()) {
    const auto& f = failures.front();
    os << "; first: " << f.evaluator << " at probe " << f.probe << " (analytic " << f.analytic << ", fd " << f.fd
       << ")";
  }
  return os.str();
}

namespace {

double uni(CounterRng& r, double lo, double hi) { return lo + (hi - lo) * r.uniform(); }

// one output of the coefficient bundle with its declared partials
struct Out {
  std::string name;
  double val;
  std::vector<double> dx, du, dm;
  double da = 0.0;
};

std::vector<Out> flatten(const Coeffs& c) {
  const int d = c.d, n = c.n, k = c.k, J = c.J, K = c.K;
  std::vector<Out> o;
  auto add = [&](std::string nm, double v, const double* dx, const double* du, const double* dm, double da) {
    Out r{std::move(nm), v, std::vector<double>(d, 0.0), std::vector<double>(k, 0.0), std::vector<double>(J, 0.0), da};
    if (dx) std::copy(dx, dx + d, r.dx.begin());
    if (du) std::copy(du, du + k, r.du.begin());
    if (dm) std::copy(dm, dm + J, r.dm.begin());
    o.push_back(std::move(r));
  };
  for (int i = 0; i < d; ++i)
    add("b[" + std::to_string(i) + "]", c.b[i], &c.b_x[i * d], &c.b_u[i * k], J ? &c.b_m[i * J] : nullptr, 0.0);
  for (int r = 0; r < d * n; ++r)
    add("sigma[" + std::to_string(r) + "]", c.sig[r], &c.sig_x[r * d], &c.sig_u[r * k], J ? &c.sig_m[r * J] : nullptr,
        0.0);
  add("alpha", c.alpha, c.alpha_x.data(), c.alpha_u.data(), c.alpha_m.data(), 0.0);
  for (int j = 0; j < n; ++j)
    add("beta[" + std::to_string(j) + "]", c.beta[j], &c.beta_x[j * d], &c.beta_u[j * k],
        J ? &c.beta_m[j * J] : nullptr, 0.0);
  for (int r = 0; r < K * d; ++r)
    add("eta[" + std::to_string(r) + "]", c.eta[r], &c.eta_x[r * d], &c.eta_u[r * k], nullptr, 0.0);
  for (int q = 0; q < K; ++q)
    add("gamma[" + std::to_string(q) + "]", c.gam[q], &c.gam_x[q * d], &c.gam_u[q * k], nullptr, 0.0);
  add("f", c.f, c.f_x.data(), c.f_u.data(), c.f_m.data(), c.f_a);
  return o;
}

struct Point {
  double t;
  std::vector<double> x, u, m;
  double a;
};

std::vector<double> values(const Model& model, const Point& p) {
  Coeffs c = model.make_coeffs();
  c.zero();
  model.eval(p.t, p.x.data(), p.a, p.m.data(), p.u.data(), c, false);
  std::vector<double> v;
  for (const auto& o : flatten(c)) v.push_back(o.val);
  return v;
}

// weighted atoms scaled to total mass in (0.2, 1.5), plain atoms to mass 1
WeightedMeasure random_measure(CounterRng& r, int d, double radius, bool probability) {
  const int na = 1 + static_cast<int>(r.uniform() * 3.0);
  WeightedMeasure mu(d);
  for (int i = 0; i < na; ++i) {
    std::vector<double> x(d);
    for (auto& v : x) v = uni(r, -radius, radius);
    mu.add(probability ? 1.0 / na : uni(r, 0.2, 1.5) / na, std::move(x));
  }
  return mu;
}

std::vector<double> features_of(const Model& model, const WeightedMeasure& w, const WeightedMeasure& p) {
  std::vector<double> m(model.J());
  for (int j = 0; j < model.J(); ++j) {
    const WeightedMeasure& mu = model.features()[j].kind == FeatureKind::Weighted ? w : p;
    double s = 0.0;
    for (const auto& at : mu.atoms()) s += at.weight * model.feature(j, at.x.data(), nullptr);
    m[j] = s;
  }
  return m;
}

}  // namespace

HypothesisReport validate_hypotheses(const Model& model, const ProbeSpec& spec) {
  const auto& D = model.dims();
  const int d = D.d, k = D.k, J = model.J();
  const double K = model.lipschitz_bound();
  CounterRng rng(spec.seed, 0, 0, Stream::Probes);
  double lip = 0.0, growth = 0.0, bound = 0.0, floor = 1e300;
  for (int pr = 0; pr < spec.probes; ++pr) {
    Point p1, p2;
    p1.t = p2.t = uni(rng, 0.0, 1.0);
    p1.x.resize(d);
    p2.x.resize(d);
    for (int l = 0; l < d; ++l) {
      p1.x[l] = uni(rng, -spec.x_radius, spec.x_radius);
      p2.x[l] = uni(rng, -spec.x_radius, spec.x_radius);
    }
    p1.u.resize(k);
    for (auto& v : p1.u) v = uni(rng, spec.u_lo, spec.u_hi);
    p2.u = p1.u;
    p1.a = p2.a = uni(rng, spec.a_lo, spec.a_hi);
    const WeightedMeasure w1 = random_measure(rng, d, spec.x_radius, false), w2 = random_measure(rng, d, spec.x_radius, false);
    const WeightedMeasure q1 = random_measure(rng, d, spec.x_radius, true), q2 = random_measure(rng, d, spec.x_radius, true);
    p1.m = features_of(model, w1, q1);
    p2.m = features_of(model, w2, q2);
    double dist;
    if (d == 1) {
      dist = rho_distance(w1, w2) + rho_distance(q1, q2);
    } else {
      dist = 0.0;
      for (int j = 0; j < J; ++j) dist += std::abs(p1.m[j] - p2.m[j]);
    }
    double dx = 0.0;
    for (int l = 0; l < d; ++l) dx += (p1.x[l] - p2.x[l]) * (p1.x[l] - p2.x[l]);
    dx = std::sqrt(dx);

    Coeffs c1 = model.make_coeffs(), c2 = model.make_coeffs();
    c1.zero();
    c2.zero();
    model.eval(p1.t, p1.x.data(), p1.a, p1.m.data(), p1.u.data(), c1, true);
    model.eval(p2.t, p2.x.data(), p2.a, p2.m.data(), p2.u.data(), c2, false);
    const auto o1 = flatten(c1), o2 = flatten(c2);
    // dynamics coefficients only; the running cost is not part of the Lipschitz hypothesis
    double diff = 0.0;
    for (std::size_t r = 0; r + 1 < o1.size(); ++r) diff = std::max(diff, std::abs(o1[r].val - o2[r].val));
    if (dx + dist > 1e-12) lip = std::max(lip, diff / (dx + dist));

    // measure-derivative growth in x'
    std::vector<double> xp(d);
    for (auto& v : xp) v = uni(rng, -3.0 * spec.x_radius, 3.0 * spec.x_radius);
    double nx = 0.0;
    for (double v : xp) nx += v * v;
    nx = std::sqrt(nx);
    for (std::size_t r = 0; r + 1 < o1.size(); ++r) {
      if (J == 0) break;
      growth = std::max(growth, std::abs(model.mu_kernel(o1[r].dm.data(), xp.data(), FeatureKind::Weighted)) / (1.0 + nx));
      growth = std::max(growth, std::abs(model.mu_kernel(o1[r].dm.data(), xp.data(), FeatureKind::Plain)) / (1.0 + nx));
    }
    // weight coefficients and their derivatives
    for (const auto& o : o1) {
      if (o.name != "alpha" && o.name.rfind("beta", 0) != 0 && o.name.rfind("gamma", 0) != 0) continue;
      bound = std::max(bound, std::abs(o.val));
      for (double v : o.dx) bound = std::max(bound, std::abs(v));
      for (double v : o.du) bound = std::max(bound, std::abs(v));
      for (double v : o.dm) bound = std::max(bound, std::abs(v));
    }
    for (int q = 0; q < model.K(); ++q) floor = std::min(floor, 1.0 + c1.gam[q]);
  }
  HypothesisReport rep;
  const double slack = 1.0 + 1e-9;
  rep.rows.push_back({d == 1 ? "lipschitz_x_rho" : "lipschitz_x_features", lip, K, lip <= K * slack});
  rep.rows.push_back({"measure_derivative_growth", growth, K, growth <= K * slack});
  rep.rows.push_back({"weight_coefficients_bounded", bound, K, bound <= K * slack});
  if (model.K() > 0) rep.rows.push_back({"jump_positivity", floor, model.k_floor(), floor >= model.k_floor() * (1.0 - 1e-12)});
  return rep;
}

DerivativeReport check_derivatives(const Model& model, double tol, int probes, std::uint64_t seed) {
  const auto& D = model.dims();
  const int d = D.d, k = D.k, J = model.J();
  CounterRng rng(seed, 0, 0, Stream::Probes);
  DerivativeReport rep;
  auto check = [&](const std::string& name, int pr, double an, double fd) {
    ++rep.checks;
    const double err = std::abs(fd - an);
    if (!(err <= tol * std::max(1.0, std::abs(an)))) rep.failures.push_back({name, pr, an, fd, err});
  };
  auto step = [](double v) { return 1e-5 * std::max(1.0, std::abs(v)); };

  for (int pr = 0; pr < probes; ++pr) {
    Point p;
    p.t = uni(rng, 0.0, 0.999);
    p.x.resize(d);
    for (auto& v : p.x) v = uni(rng, -2.0, 2.0);
    p.u.resize(k);
    for (auto& v : p.u) v = uni(rng, -2.0, 2.0);
    p.m.resize(J);
    for (auto& v : p.m) v = uni(rng, -1.0, 1.0);
    p.a = uni(rng, 0.5, 2.0);

    Coeffs c = model.make_coeffs();
    c.zero();
    model.eval(p.t, p.x.data(), p.a, p.m.data(), p.u.data(), c, true);
    const auto outs = flatten(c);

    auto central = [&](auto set, double h) {
      Point lo = p, hi = p;
      set(hi, +h);
      set(lo, -h);
      const auto vh = values(model, hi), vl = values(model, lo);
      std::vector<double> g(vh.size());
      for (std::size_t r = 0; r < vh.size(); ++r) g[r] = (vh[r] - vl[r]) / (2.0 * h);
      return g;
    };
    for (int l = 0; l < d; ++l) {
      const double h = step(p.x[l]);
      const auto g = central([l](Point& q, double s) { q.x[l] += s; }, h);
      for (std::size_t r = 0; r < outs.size(); ++r) check(outs[r].name + "_x[" + std::to_string(l) + "]", pr, outs[r].dx[l], g[r]);
    }
    {
      const double h = step(p.a);
      const auto g = central([](Point& q, double s) { q.a += s; }, h);
      for (std::size_t r = 0; r < outs.size(); ++r) check(outs[r].name + "_a", pr, outs[r].da, g[r]);
    }
    for (int cc = 0; cc < k; ++cc) {
      const double h = step(p.u[cc]);
      const auto g = central([cc](Point& q, double s) { q.u[cc] += s; }, h);
      for (std::size_t r = 0; r < outs.size(); ++r) check(outs[r].name + "_u[" + std::to_string(cc) + "]", pr, outs[r].du[cc], g[r]);
    }
    for (int j = 0; j < J; ++j) {
      const double h = step(p.m[j]);
      const auto g = central([j](Point& q, double s) { q.m[j] += s; }, h);
      for (std::size_t r = 0; r < outs.size(); ++r) check(outs[r].name + "_m[" + std::to_string(j) + "]", pr, outs[r].dm[j], g[r]);
    }

    // measure derivative through its definition: [phi(mu + eps nu) - phi(mu)] / eps -> <nu, phi_mu>
    if (J > 0) {
      WeightedMeasure nu_w = random_measure(rng, d, 2.0, false), nu_p = random_measure(rng, d, 2.0, false);
      const std::vector<double> dm = features_of(model, nu_w, nu_p);
      const auto v0 = values(model, p);
      std::vector<double> e1(outs.size()), e2(outs.size()), an(outs.size());
      for (std::size_t r = 0; r < outs.size(); ++r) {
        double s = 0.0;
        for (const auto& at : nu_w.atoms()) s += at.weight * model.mu_kernel(outs[r].dm.data(), at.x.data(), FeatureKind::Weighted);
        for (const auto& at : nu_p.atoms()) s += at.weight * model.mu_kernel(outs[r].dm.data(), at.x.data(), FeatureKind::Plain);
        an[r] = s;
      }
      for (double eps : {1e-2, 1e-3}) {
        Point q = p;
        for (int j = 0; j < J; ++j) q.m[j] += eps * dm[j];
        const auto v1 = values(model, q);
        for (std::size_t r = 0; r < outs.size(); ++r) (eps == 1e-2 ? e1 : e2)[r] = std::abs((v1[r] - v0[r]) / eps - an[r]);
      }
      for (std::size_t r = 0; r < outs.size(); ++r) {
        ++rep.checks;
        const double floor_ = std::max(tol * std::max(1.0, std::abs(an[r])), 1e-10);
        if (!(e2[r] <= std::max(0.5 * e1[r], floor_)))
          rep.failures.push_back({outs[r].name + "_mu", pr, an[r], an[r] + e2[r], e2[r]});
      }
    }

    // terminal cost
    {
      TerminalCoeffs tc = model.make_terminal();
      tc.zero();
      model.terminal(p.x.data(), p.a, p.m.data(), tc);
      auto phi = [&](const std::vector<double>& x, double a, const std::vector<double>& m) {
        TerminalCoeffs t2 = model.make_terminal();
        t2.zero();
        model.terminal(x.data(), a, m.data(), t2);
        return t2.Phi;
      };
      for (int l = 0; l < d; ++l) {
        const double h = step(p.x[l]);
        auto xh = p.x, xl = p.x;
        xh[l] += h;
        xl[l] -= h;
        check("Phi_x[" + std::to_string(l) + "]", pr, tc.Phi_x[l], (phi(xh, p.a, p.m) - phi(xl, p.a, p.m)) / (2 * h));
      }
      {
        const double h = step(p.a);
        check("Phi_a", pr, tc.Phi_a, (phi(p.x, p.a + h, p.m) - phi(p.x, p.a - h, p.m)) / (2 * h));
      }
      for (int j = 0; j < J; ++j) {
        const double h = step(p.m[j]);
        auto mh = p.m, ml = p.m;
        mh[j] += h;
        ml[j] -= h;
        check("Phi_m[" + std::to_string(j) + "]", pr, tc.Phi_m[j], (phi(p.x, p.a, mh) - phi(p.x, p.a, ml)) / (2 * h));
      }
    }

    // features
    std::vector<double> g(d);
    for (int j = 0; j < J; ++j) {
      model.feature(j, p.x.data(), g.data());
      for (int l = 0; l < d; ++l) {
        const double h = step(p.x[l]);
        auto xh = p.x, xl = p.x;
        xh[l] += h;
        xl[l] -= h;
        check("feature[" + std::to_string(j) + "]_x[" + std::to_string(l) + "]", pr, g[l],
              (model.feature(j, xh.data(), nullptr) - model.feature(j, xl.data(), nullptr)) / (2 * h));
      }
    }
  }
  return rep;
}

}  // namespace wmfc
