#include "wmfc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wmfc {

JumpSpec::JumpSpec(std::vector<Mark> m) : marks(std::move(m)) {
  for (const auto& mk : marks)
    if (!(mk.lambda > 0.0) || !std::isfinite(mk.lambda) || !std::isfinite(mk.z))
      throw ModelError("JumpSpec: every intensity must be positive and finite");
}

double JumpSpec::total_intensity() const {
  double s = 0.0;
  for (const auto& mk : marks) s += mk.lambda;
  return s;
}

std::vector<double> JumpSpec::lambdas() const {
  std::vector<double> l;
  for (const auto& mk : marks) l.push_back(mk.lambda);
  return l;
}

Coeffs::Coeffs(int d_, int n_, int k_, int J_, int K_)
    : d(d_), n(n_), k(k_), J(J_), K(K_),
      b(d), b_x(d * d), b_u(d * k), b_m(d * J),
      sig(d * n), sig_x(d * n * d), sig_u(d * n * k), sig_m(d * n * J),
      alpha_x(d), alpha_u(k), alpha_m(J),
      beta(n), beta_x(n * d), beta_u(n * k), beta_m(n * J),
      eta(K * d), eta_x(K * d * d), eta_u(K * d * k),
      gam(K), gam_x(K * d), gam_u(K * k),
      f_x(d), f_u(k), f_m(J) {}

void Coeffs::zero() {
  for (auto* v : {&b, &b_x, &b_u, &b_m, &sig, &sig_x, &sig_u, &sig_m, &alpha_x, &alpha_u, &alpha_m, &beta, &beta_x,
                  &beta_u, &beta_m, &eta, &eta_x, &eta_u, &gam, &gam_x, &gam_u, &f_x, &f_u, &f_m})
    std::fill(v->begin(), v->end(), 0.0);
  alpha = f = f_a = 0.0;
}

void TerminalCoeffs::zero() {
  Phi = Phi_a = 0.0;
  std::fill(Phi_x.begin(), Phi_x.end(), 0.0);
  std::fill(Phi_m.begin(), Phi_m.end(), 0.0);
}

double Model::mu_kernel(const double* dphi_dm, const double* xp, FeatureKind kind) const {
  double s = 0.0;
  for (int j = 0; j < J(); ++j)
    if (features_[j].kind == kind && dphi_dm[j] != 0.0) s += dphi_dm[j] * feature(j, xp, nullptr);
  return s;
}

void Model::mu1_kernel(const double* dphi_dm, const double* xp, FeatureKind kind, double* out) const {
  const int d = dims_.d;
  std::vector<double> g(d);
  for (int l = 0; l < d; ++l) out[l] = 0.0;
  for (int j = 0; j < J(); ++j) {
    if (features_[j].kind != kind || dphi_dm[j] == 0.0) continue;
    feature(j, xp, g.data());
    for (int l = 0; l < d; ++l) out[l] += dphi_dm[j] * g[l];
  }
}

double PiecewiseConstant::operator()(double t) const {
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  const std::size_t i = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
  return values[std::min(i, values.size() - 1)];
}

double PiecewiseConstant::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace wmfc
