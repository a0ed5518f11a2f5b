#include "wmfc/hamiltonian.hpp"

#include <stdexcept>

namespace wmfc {

HamiltonianInputs HamiltonianInputs::zeros(const Model& model) {
  const auto& D = model.dims();
  const int K = model.K();
  HamiltonianInputs in;
  in.x.assign(D.d, 0.0);
  in.m.assign(model.J(), 0.0);
  in.u.assign(D.k, 0.0);
  in.p.assign(1, 0.0);
  in.q.assign(D.n, 0.0);
  in.r.assign(K, 0.0);
  in.P.assign(D.d, 0.0);
  in.Q.assign(D.d * D.n, 0.0);
  in.R.assign(K * D.d, 0.0);
  return in;
}

void HamiltonianInputs::check(const Model& model) const {
  const auto& D = model.dims();
  const std::size_t K = model.K();
  if (x.size() != static_cast<std::size_t>(D.d) || m.size() != static_cast<std::size_t>(model.J()) ||
      u.size() != static_cast<std::size_t>(D.k) || p.size() != 1 || q.size() != static_cast<std::size_t>(D.n) ||
      r.size() != K || P.size() != static_cast<std::size_t>(D.d) ||
      Q.size() != static_cast<std::size_t>(D.d * D.n) || R.size() != K * D.d)
    throw std::invalid_argument("hamiltonian: input dimensions do not match the model");
}

double hamiltonian_value(const Model& model, const Coeffs& c, double a, const AdjointArgs& g) {
  const int d = c.d, n = c.n, K = c.K;
  const auto& marks = model.jumps().marks;
  double w = g.p[0] * c.alpha;
  for (int j = 0; j < n; ++j) w += g.q[j] * c.beta[j];
  for (int q = 0; q < K; ++q) w += marks[q].lambda * g.r[q] * c.gam[q];
  double H = a * w + c.f;
  for (int i = 0; i < d; ++i) {
    H += g.P[i] * c.b[i];
    for (int j = 0; j < n; ++j) H += g.Q[i * n + j] * c.sig[i * n + j];
  }
  for (int q = 0; q < K; ++q)
    for (int i = 0; i < d; ++i) H += marks[q].lambda * g.R[q * d + i] * c.eta[q * d + i];
  return H;
}

void hamiltonian_u_from(const Model& model, const Coeffs& c, double a, const AdjointArgs& g, double* Hu) {
  const int d = c.d, n = c.n, k = c.k, K = c.K;
  const auto& marks = model.jumps().marks;
  for (int cc = 0; cc < k; ++cc) {
    double w = g.p[0] * c.alpha_u[cc];
    for (int j = 0; j < n; ++j) w += g.q[j] * c.beta_u[j * k + cc];
    for (int q = 0; q < K; ++q) w += marks[q].lambda * g.r[q] * c.gam_u[q * k + cc];
    double h = a * w + c.f_u[cc];
    for (int i = 0; i < d; ++i) {
      h += g.P[i] * c.b_u[i * k + cc];
      for (int j = 0; j < n; ++j) h += g.Q[i * n + j] * c.sig_u[(i * n + j) * k + cc];
    }
    for (int q = 0; q < K; ++q)
      for (int i = 0; i < d; ++i) h += marks[q].lambda * g.R[q * d + i] * c.eta_u[(q * d + i) * k + cc];
    Hu[cc] = h;
  }
}

void hamiltonian_partials_from(const Model& model, const Coeffs& c, double a, const AdjointArgs& g,
                               HamiltonianPartials& out) {
  const int d = c.d, n = c.n, K = c.K, J = c.J;
  const auto& marks = model.jumps().marks;
  for (int l = 0; l < d; ++l) {
    double w = g.p[0] * c.alpha_x[l];
    for (int j = 0; j < n; ++j) w += g.q[j] * c.beta_x[j * d + l];
    for (int q = 0; q < K; ++q) w += marks[q].lambda * g.r[q] * c.gam_x[q * d + l];
    double h = a * w + c.f_x[l];
    for (int i = 0; i < d; ++i) {
      h += g.P[i] * c.b_x[i * d + l];
      for (int j = 0; j < n; ++j) h += g.Q[i * n + j] * c.sig_x[(i * n + j) * d + l];
    }
    for (int q = 0; q < K; ++q)
      for (int i = 0; i < d; ++i) h += marks[q].lambda * g.R[q * d + i] * c.eta_x[(q * d + i) * d + l];
    out.Hx[l] = h;
  }
  double w = g.p[0] * c.alpha;
  for (int j = 0; j < n; ++j) w += g.q[j] * c.beta[j];
  for (int q = 0; q < K; ++q) w += marks[q].lambda * g.r[q] * c.gam[q];
  out.Ha = w + c.f_a;
  hamiltonian_u_from(model, c, a, g, out.Hu.data());
  for (int jj = 0; jj < J; ++jj) {
    double v = g.p[0] * c.alpha_m[jj];
    for (int j = 0; j < n; ++j) v += g.q[j] * c.beta_m[j * J + jj];
    double h = a * v + c.f_m[jj];
    for (int i = 0; i < d; ++i) {
      h += g.P[i] * c.b_m[i * J + jj];
      for (int j = 0; j < n; ++j) h += g.Q[i * n + j] * c.sig_m[(i * n + j) * J + jj];
    }
    out.Hm[jj] = h;
  }
}

double hamiltonian(const Model& model, const HamiltonianInputs& in) {
  in.check(model);
  Coeffs c = model.make_coeffs();
  c.zero();
  model.eval(in.t, in.x.data(), in.a, in.m.data(), in.u.data(), c, false);
  return hamiltonian_value(model, c, in.a, in.args());
}

HamiltonianPartials hamiltonian_partials(const Model& model, const HamiltonianInputs& in) {
  in.check(model);
  Coeffs c = model.make_coeffs();
  c.zero();
  model.eval(in.t, in.x.data(), in.a, in.m.data(), in.u.data(), c, true);
  HamiltonianPartials hp(model);
  hamiltonian_partials_from(model, c, in.a, in.args(), hp);
  return hp;
}

double hamiltonian_mu(const Model& model, const HamiltonianPartials& hp, const double* xp) {
  return model.mu_kernel(hp.Hm.data(), xp, FeatureKind::Weighted);
}

void hamiltonian_mu1(const Model& model, const HamiltonianPartials& hp, const double* xp, double* out) {
  model.mu1_kernel(hp.Hm.data(), xp, FeatureKind::Weighted, out);
}

}  // namespace wmfc
