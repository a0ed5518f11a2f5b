#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmfc/model.hpp"

namespace wmfc {

namespace {

inline double sech2(double y) {
  const double t = std::tanh(y);
  return 1.0 - t * t;
}

// ---------------------------------------------------------------- LQ
class LQModel final : public Model {
 public:
  explicit LQModel(const LQParams& p) : p_(p) {
    dims_ = {1, 1, 1};
    features_ = {{FeatureKind::Weighted, "mean"}};
    x0_ = {p.x};
    a0_ = p.a;
    k_floor_ = 1.0;
    lip_ = std::max({p.b11.max_abs(), p.b12.max_abs(), p.s11.max_abs(), p.s12.max_abs(), std::abs(p.alpha),
                     std::abs(p.beta), 1e-12});
    convex_ = true;
  }
  std::string name() const override { return "lq"; }

  void eval(double t, const double* x, double, const double* m, const double* u, Coeffs& c,
            bool derivs) const override {
    const double b11 = p_.b11(t), b12 = p_.b12(t), b13 = p_.b13(t);
    const double s11 = p_.s11(t), s12 = p_.s12(t), s13 = p_.s13(t);
    c.b[0] = b11 * x[0] + b12 * m[0] + b13 * u[0];
    c.sig[0] = s11 * x[0] + s12 * m[0] + s13 * u[0];
    c.alpha = p_.alpha;
    c.beta[0] = p_.beta;
    c.f = p_.R1 * x[0] * x[0] + p_.R2 * u[0] * u[0];
    if (!derivs) return;
    c.b_x[0] = b11;
    c.b_m[0] = b12;
    c.b_u[0] = b13;
    c.sig_x[0] = s11;
    c.sig_m[0] = s12;
    c.sig_u[0] = s13;
    c.f_x[0] = 2.0 * p_.R1 * x[0];
    c.f_u[0] = 2.0 * p_.R2 * u[0];
  }
  void terminal(const double* x, double, const double*, TerminalCoeffs& tc) const override {
    tc.Phi = p_.Phi * x[0] * x[0];
    tc.Phi_x[0] = 2.0 * p_.Phi * x[0];
  }
  double feature(int, const double* x, double* grad) const override {
    if (grad) grad[0] = 1.0;
    return x[0];
  }

 private:
  LQParams p_;
};

// ---------------------------------------------------------------- mean-variance
class MeanVarianceModel final : public Model {
 public:
  explicit MeanVarianceModel(const MeanVarianceParams& p) : p_(p) {
    dims_ = {1, 1, 1};
    jumps_ = p.jumps;
    features_ = {{FeatureKind::Weighted, "weighted_mean"}, {FeatureKind::Plain, "plain_mean"}};
    x0_ = {p.x};
    a0_ = p.a;
    double g_lo = 0.0, zmax = 0.0;
    for (double g : p.gamma) g_lo = std::min(g_lo, g);
    for (const auto& mk : p.jumps.marks) zmax = std::max(zmax, std::abs(mk.z));
    k_floor_ = 1.0 + g_lo;
    // valid on the default probe box |x| <= 2, |u| <= 2
    const double bb = std::abs(p.b0) + std::abs(p.b_mu) + std::abs(p.r);
    const double ss = std::abs(p.sigma0) + std::abs(p.sigma_mu);
    lip_ = std::max({2.0 * bb + std::abs(p.r), 4.0 * std::abs(p.b_mu), 2.0 * ss, 4.0 * std::abs(p.sigma_mu), 2.0 * zmax,
                     std::abs(p.alpha), std::abs(p.beta), 1e-12});
  }
  std::string name() const override { return "mean_variance"; }

  void eval(double, const double* x, double, const double* m, const double* u, Coeffs& c,
            bool derivs) const override {
    const double th = std::tanh(m[0]);
    const double B = p_.b0 + p_.b_mu * th;
    const double S = p_.sigma0 + p_.sigma_mu * th;
    const double X = x[0], v = u[0];
    c.b[0] = X * (v * (B - p_.r) + p_.r);
    c.sig[0] = X * v * S;
    c.alpha = p_.alpha;
    c.beta[0] = p_.beta;
    for (int q = 0; q < K(); ++q) {
      c.eta[q] = X * v * jumps_.marks[q].z;
      c.gam[q] = p_.gamma[q];
    }
    if (!derivs) return;
    const double s2 = sech2(m[0]);
    c.b_x[0] = v * (B - p_.r) + p_.r;
    c.b_u[0] = X * (B - p_.r);
    c.b_m[0] = X * v * p_.b_mu * s2;
    c.sig_x[0] = v * S;
    c.sig_u[0] = X * S;
    c.sig_m[0] = X * v * p_.sigma_mu * s2;
    for (int q = 0; q < K(); ++q) {
      c.eta_x[q] = v * jumps_.marks[q].z;
      c.eta_u[q] = X * jumps_.marks[q].z;
    }
  }
  void terminal(const double* x, double, const double* m, TerminalCoeffs& tc) const override {
    const double dev = x[0] - m[1];
    tc.Phi = dev * dev - p_.lambda_mv * m[1];
    tc.Phi_x[0] = 2.0 * dev;
    tc.Phi_m[1] = -2.0 * dev - p_.lambda_mv;
  }
  double feature(int, const double* x, double* grad) const override {
    if (grad) grad[0] = 1.0;
    return x[0];
  }

 private:
  MeanVarianceParams p_;
};

// ---------------------------------------------------------------- constant weight coefficients
class WeightConstModel final : public Model {
 public:
  explicit WeightConstModel(const WeightConstParams& p) : p_(p) {
    dims_ = {1, static_cast<int>(p.beta.size()), 1};
    jumps_ = p.jumps;
    x0_ = {p.x};
    a0_ = p.a;
    double lo = 1.0;
    for (const auto& mk : jumps_.marks) lo = std::min(lo, 1.0 + mk.z);
    k_floor_ = lo;
    double bmax = 0.0;
    for (double b : p.beta) bmax = std::max(bmax, std::abs(b));
    lip_ = std::max({1.0, std::abs(p.alpha), bmax, std::abs(p.sigma)});
  }
  std::string name() const override { return "weight_const"; }

  void eval(double, const double* x, double a, const double*, const double* u, Coeffs& c,
            bool derivs) const override {
    c.b[0] = u[0];
    c.sig[0] = p_.sigma;
    c.alpha = p_.alpha;
    for (int j = 0; j < dims_.n; ++j) c.beta[j] = p_.beta[j];
    for (int q = 0; q < K(); ++q) c.gam[q] = jumps_.marks[q].z;
    c.f = 0.5 * (x[0] * x[0] + u[0] * u[0]);
    (void)a;
    if (!derivs) return;
    c.b_u[0] = 1.0;
    c.f_x[0] = x[0];
    c.f_u[0] = u[0];
  }
  void terminal(const double* x, double a, const double*, TerminalCoeffs& tc) const override {
    tc.Phi = 0.5 * a * x[0] * x[0];
    tc.Phi_x[0] = a * x[0];
    tc.Phi_a = 0.5 * x[0] * x[0];
  }
  double feature(int, const double*, double*) const override { return 0.0; }

 private:
  WeightConstParams p_;
};

// ---------------------------------------------------------------- trivial quadratic
class TrivialModel final : public Model {
 public:
  TrivialModel() {
    dims_ = {1, 1, 1};
    x0_ = {0.0};
    a0_ = 1.0;
    convex_ = true;
  }
  std::string name() const override { return "trivial"; }
  void eval(double, const double*, double, const double*, const double* u, Coeffs& c, bool derivs) const override {
    c.b[0] = u[0];
    c.f = u[0] * u[0];
    if (!derivs) return;
    c.b_u[0] = 1.0;
    c.f_u[0] = 2.0 * u[0];
  }
  void terminal(const double*, double, const double*, TerminalCoeffs&) const override {}
  double feature(int, const double*, double*) const override { return 0.0; }
};

// ---------------------------------------------------------------- smooth scalar toy
class ToyModel final : public Model {
 public:
  explicit ToyModel(double c) : c_(c) {
    dims_ = {1, 1, 1};
    jumps_ = JumpSpec({{0.8, 1.0}, {-0.6, 0.7}});
    features_ = {{FeatureKind::Weighted, "weighted_mean"}, {FeatureKind::Plain, "plain_tanh"}};
    x0_ = {0.5};
    a0_ = 1.0;
    k_floor_ = 0.6;
    lip_ = std::max(1.0, std::abs(c));
  }
  std::string name() const override { return "toy"; }

  void eval(double, const double* xp, double a, const double* m, const double* up, Coeffs& c,
            bool derivs) const override {
    const double x = xp[0], u = up[0];
    const double tx = std::tanh(x), tm = std::tanh(m[0]);
    c.b[0] = -0.5 * x + 0.2 * std::sin(x) + c_ * tm + u;
    c.sig[0] = 0.3 + 0.1 * tx + 0.1 * std::sin(m[1]) + 0.2 * u;
    c.alpha = 0.1 * tx + 0.1 * tm + 0.05 * std::sin(u);
    c.beta[0] = 0.2 + 0.1 * std::cos(x + u);
    for (int q = 0; q < 2; ++q) {
      const double z = jumps_.marks[q].z;
      c.eta[q] = z * (0.2 + 0.1 * tx + 0.05 * u);
      c.gam[q] = z * (0.3 * tx + 0.1 * std::sin(u));
    }
    c.f = 0.5 * x * x + 0.5 * u * u + 0.1 * a * std::cos(x) + 0.2 * x * tm + 0.1 * m[1] * m[1];
    if (!derivs) return;
    const double sx = 1.0 - tx * tx, sm = 1.0 - tm * tm;
    c.b_x[0] = -0.5 + 0.2 * std::cos(x);
    c.b_m[0] = c_ * sm;
    c.b_u[0] = 1.0;
    c.sig_x[0] = 0.1 * sx;
    c.sig_m[1] = 0.1 * std::cos(m[1]);
    c.sig_u[0] = 0.2;
    c.alpha_x[0] = 0.1 * sx;
    c.alpha_m[0] = 0.1 * sm;
    c.alpha_u[0] = 0.05 * std::cos(u);
    c.beta_x[0] = -0.1 * std::sin(x + u);
    c.beta_u[0] = -0.1 * std::sin(x + u);
    for (int q = 0; q < 2; ++q) {
      const double z = jumps_.marks[q].z;
      c.eta_x[q] = 0.1 * z * sx;
      c.eta_u[q] = 0.05 * z;
      c.gam_x[q] = 0.3 * z * sx;
      c.gam_u[q] = 0.1 * z * std::cos(u);
    }
    c.f_x[0] = x - 0.1 * a * std::sin(x) + 0.2 * tm;
    c.f_a = 0.1 * std::cos(x);
    c.f_u[0] = u;
    c.f_m[0] = 0.2 * x * sm;
    c.f_m[1] = 0.2 * m[1];
  }
  void terminal(const double* x, double a, const double*, TerminalCoeffs& tc) const override {
    tc.Phi = 0.5 * x[0] * x[0] + 0.2 * a * x[0];
    tc.Phi_x[0] = x[0] + 0.2 * a;
    tc.Phi_a = 0.2 * x[0];
  }
  double feature(int j, const double* x, double* grad) const override {
    if (j == 0) {
      if (grad) grad[0] = 1.0;
      return x[0];
    }
    const double t = std::tanh(x[0]);
    if (grad) grad[0] = 1.0 - t * t;
    return t;
  }

 private:
  double c_;
};

// ---------------------------------------------------------------- two-dimensional toy
class Toy2dModel final : public Model {
 public:
  Toy2dModel() {
    dims_ = {2, 2, 1};
    jumps_ = JumpSpec({{0.5, 0.8}});
    features_ = {{FeatureKind::Weighted, "weighted_x1"}, {FeatureKind::Weighted, "weighted_tanh_x2"}};
    x0_ = {0.5, -0.3};
    a0_ = 1.0;
    k_floor_ = 0.85;
    lip_ = 1.0;
  }
  std::string name() const override { return "toy2d"; }

  // sig index helper: component i, column j
  static int S(int i, int j) { return i * 2 + j; }

  void eval(double, const double* x, double a, const double* m, const double* up, Coeffs& c,
            bool derivs) const override {
    const double u = up[0];
    const double z = jumps_.marks[0].z;
    const double t2 = std::tanh(x[1]), t1 = std::tanh(x[0]), tm1 = std::tanh(m[0]);
    const double tsum = std::tanh(x[0] + x[1]), tu = std::tanh(u), tg = std::tanh(x[0] - u);
    c.b[0] = -0.5 * x[0] + 0.3 * t2 + u + 0.2 * tm1;
    c.b[1] = -0.4 * x[1] + 0.2 * std::sin(x[0]) + 0.3 * std::sin(m[1]) - 0.5 * u;
    c.sig[S(0, 0)] = 0.2 + 0.05 * t1;
    c.sig[S(0, 1)] = 0.1 + 0.1 * u;
    c.sig[S(1, 0)] = 0.05 * std::sin(m[0]);
    c.sig[S(1, 1)] = 0.25 + 0.05 * std::cos(x[1]);
    c.eta[0] = z * 0.1 * t1;
    c.eta[1] = z * (0.1 + 0.05 * u);
    c.alpha = 0.1 * tsum + 0.05 * tu + 0.05 * tm1;
    c.beta[0] = 0.2;
    c.beta[1] = 0.1 * std::cos(x[1]) + 0.05 * std::sin(m[1]);
    c.gam[0] = z * 0.2 * tg;
    c.f = 0.5 * (x[0] * x[0] + x[1] * x[1]) + 0.5 * u * u + 0.1 * a * x[0] + 0.1 * m[0] * x[1];
    if (!derivs) return;
    const int d = 2;
    c.b_x[0 * d + 0] = -0.5;
    c.b_x[0 * d + 1] = 0.3 * (1.0 - t2 * t2);
    c.b_x[1 * d + 0] = 0.2 * std::cos(x[0]);
    c.b_x[1 * d + 1] = -0.4;
    c.b_u[0] = 1.0;
    c.b_u[1] = -0.5;
    c.b_m[0 * 2 + 0] = 0.2 * (1.0 - tm1 * tm1);
    c.b_m[1 * 2 + 1] = 0.3 * std::cos(m[1]);
    c.sig_x[S(0, 0) * d + 0] = 0.05 * (1.0 - t1 * t1);
    c.sig_x[S(1, 1) * d + 1] = -0.05 * std::sin(x[1]);
    c.sig_u[S(0, 1)] = 0.1;
    c.sig_m[S(1, 0) * 2 + 0] = 0.05 * std::cos(m[0]);
    c.eta_x[0 * d + 0] = z * 0.1 * (1.0 - t1 * t1);
    c.eta_u[1] = z * 0.05;
    c.alpha_x[0] = 0.1 * (1.0 - tsum * tsum);
    c.alpha_x[1] = 0.1 * (1.0 - tsum * tsum);
    c.alpha_u[0] = 0.05 * (1.0 - tu * tu);
    c.alpha_m[0] = 0.05 * (1.0 - tm1 * tm1);
    c.beta_x[1 * d + 1] = -0.1 * std::sin(x[1]);
    c.beta_m[1 * 2 + 1] = 0.05 * std::cos(m[1]);
    c.gam_x[0] = z * 0.2 * (1.0 - tg * tg);
    c.gam_u[0] = -z * 0.2 * (1.0 - tg * tg);
    c.f_x[0] = x[0] + 0.1 * a;
    c.f_x[1] = x[1] + 0.1 * m[0];
    c.f_a = 0.1 * x[0];
    c.f_u[0] = u;
    c.f_m[0] = 0.1 * x[1];
  }
  void terminal(const double* x, double a, const double*, TerminalCoeffs& tc) const override {
    tc.Phi = 0.5 * x[0] * x[0] + 0.25 * a * x[1] * x[1];
    tc.Phi_x[0] = x[0];
    tc.Phi_x[1] = 0.5 * a * x[1];
    tc.Phi_a = 0.25 * x[1] * x[1];
  }
  double feature(int j, const double* x, double* grad) const override {
    if (j == 0) {
      if (grad) {
        grad[0] = 1.0;
        grad[1] = 0.0;
      }
      return x[0];
    }
    const double t = std::tanh(x[1]);
    if (grad) {
      grad[0] = 0.0;
      grad[1] = 1.0 - t * t;
    }
    return t;
  }
};

// ---------------------------------------------------------------- planted fault
class PlantedFaultModel final : public Model {
 public:
  explicit PlantedFaultModel(ModelPtr base) : base_(std::move(base)) {
    dims_ = base_->dims();
    jumps_ = base_->jumps();
    features_ = base_->features();
    x0_ = base_->x0();
    a0_ = base_->a0();
    k_floor_ = base_->k_floor();
    lip_ = base_->lipschitz_bound();
  }
  std::string name() const override { return "planted_fault"; }
  void eval(double t, const double* x, double a, const double* m, const double* u, Coeffs& c,
            bool derivs) const override {
    base_->eval(t, x, a, m, u, c, derivs);
    if (derivs)
      for (auto& v : c.f_u) v *= 2.0;
  }
  void terminal(const double* x, double a, const double* m, TerminalCoeffs& tc) const override {
    base_->terminal(x, a, m, tc);
  }
  double feature(int j, const double* x, double* grad) const override { return base_->feature(j, x, grad); }

 private:
  ModelPtr base_;
};

}  // namespace

bool LQParams::decoupled() const {
  return b12.max_abs() == 0.0 && s12.max_abs() == 0.0 && alpha == 0.0 && beta == 0.0 && a == 1.0;
}

ModelPtr make_lq_model(const LQParams& p) {
  if (!(p.R2 > 0.0)) throw ModelError("LQ model: R2 must be positive");
  if (p.R1 < 0.0) throw ModelError("LQ model: R1 must be nonnegative");
  if (!(p.a > 0.0)) throw ModelError("LQ model: initial weight a must be positive");
  const bool waived = p.decoupled_baseline && p.decoupled();
  if (p.decoupled_baseline && !p.decoupled())
    throw ModelError("LQ model: decoupled baseline requires b12 = s12 = alpha = beta = 0 and a = 1");
  if (!waived) {
    // check on every knot of b13 and s13
    std::vector<double> ts = p.b13.knots;
    ts.insert(ts.end(), p.s13.knots.begin(), p.s13.knots.end());
    for (double t : ts) {
      const double v = p.b13(t) + p.beta * p.s13(t);
      if (std::abs(v) > 1e-12) {
        std::ostringstream os;
        os << "LQ model: structural condition b13 + beta*sigma13 = 0 violated (value " << v << " at t = " << t << ")";
        throw ModelError(os.str());
      }
    }
  }
  return std::make_shared<LQModel>(p);
}

ModelPtr make_mean_variance_model(const MeanVarianceParams& p) {
  if (!(p.x > 0.0)) throw ModelError("mean-variance model: nonpositive initial wealth");
  if (!(p.lambda_mv > 0.0)) throw ModelError("mean-variance model: lambda_mv must be positive");
  if (p.gamma.size() != p.jumps.marks.size())
    throw ModelError("mean-variance model: need one gamma per jump mark");
  for (double g : p.gamma)
    if (!(1.0 + g > 0.0)) throw ModelError("mean-variance model: 1 + gamma must be positive");
  return std::make_shared<MeanVarianceModel>(p);
}

ModelPtr make_weight_const_model(const WeightConstParams& p) {
  if (p.beta.empty()) throw ModelError("weight_const model: beta needs at least one component");
  for (const auto& mk : p.jumps.marks)
    if (!(1.0 + mk.z > 0.0)) throw ModelError("weight_const model: 1 + gamma must be positive");
  return std::make_shared<WeightConstModel>(p);
}

ModelPtr make_trivial_model() { return std::make_shared<TrivialModel>(); }
ModelPtr make_toy_model(double coupling) { return std::make_shared<ToyModel>(coupling); }
ModelPtr make_toy2d_model() { return std::make_shared<Toy2dModel>(); }
ModelPtr make_planted_fault_model(ModelPtr base) { return std::make_shared<PlantedFaultModel>(std::move(base)); }

std::vector<std::string> builtin_model_names() {
  return {"lq", "mean_variance", "weight_const", "trivial", "toy", "toy2d"};
}

}  // namespace wmfc
