#include "wmfc/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmfc {

ControlBox ControlBox::uniform(int k, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("ControlBox: need lo < hi");
  ControlBox b;
  b.bounded = true;
  b.lo.assign(k, lo);
  b.hi.assign(k, hi);
  return b;
}

void ControlBox::project(double* u, int k) const {
  if (!bounded) return;
  for (int c = 0; c < k; ++c) u[c] = std::clamp(u[c], lo[c], hi[c]);
}

bool ControlBox::contains(const double* u, int k, double tol) const {
  if (!bounded) return true;
  for (int c = 0; c < k; ++c)
    if (u[c] < lo[c] - tol || u[c] > hi[c] + tol) return false;
  return true;
}

int basis_size(BasisKind kind, int d) {
  const int base = 2 + 2 * d;
  return kind == BasisKind::Default ? base : base + d + 1;
}

void eval_basis(BasisKind kind, int d, const double* x, double a, double* out) {
  int j = 0;
  out[j++] = 1.0;
  for (int l = 0; l < d; ++l) out[j++] = x[l];
  out[j++] = a;
  for (int l = 0; l < d; ++l) out[j++] = x[l] * a;
  if (kind == BasisKind::Quadratic) {
    for (int l = 0; l < d; ++l) out[j++] = x[l] * x[l];
    out[j++] = a * a;
  }
}

void eval_basis_grad(BasisKind kind, int d, const double* x, double a, double* dx, double* da) {
  const int nb = basis_size(kind, d);
  std::fill(dx, dx + nb * d, 0.0);
  std::fill(da, da + nb, 0.0);
  int j = 1;
  for (int l = 0; l < d; ++l, ++j) dx[j * d + l] = 1.0;
  da[j++] = 1.0;
  for (int l = 0; l < d; ++l, ++j) {
    dx[j * d + l] = a;
    da[j] = x[l];
  }
  if (kind == BasisKind::Quadratic) {
    for (int l = 0; l < d; ++l, ++j) dx[j * d + l] = 2.0 * x[l];
    da[j] = 2.0 * a;
  }
}

namespace {
// evaluators use fixed stack buffers
void check_dims(int k, int d) {
  if (k < 1 || k > 16 || d < 1 || d > 8) throw std::invalid_argument("ControlPolicy: need 1 <= k <= 16 and 1 <= d <= 8");
}
}  // namespace

ControlPolicy ControlPolicy::constant(int k, int d, double value, double T, ControlBox box, PolicyMode mode,
                                      BasisKind basis) {
  check_dims(k, d);
  ControlPolicy p;
  p.mode_ = mode;
  p.basis_ = basis;
  p.k_ = k;
  p.d_ = d;
  p.M_ = 1;
  p.T_ = T;
  p.box_ = std::move(box);
  const int nb = p.nb();
  p.theta_.assign(static_cast<std::size_t>(k) * nb, 0.0);
  for (int c = 0; c < k; ++c) p.theta_[static_cast<std::size_t>(c) * nb] = value;
  return p;
}

ControlPolicy ControlPolicy::feedback(int k, int d, double T, int M, BasisKind basis, std::vector<double> theta,
                                      ControlBox box) {
  check_dims(k, d);
  ControlPolicy p;
  p.mode_ = PolicyMode::FeedbackBasis;
  p.basis_ = basis;
  p.k_ = k;
  p.d_ = d;
  p.M_ = M;
  p.T_ = T;
  p.box_ = std::move(box);
  if (theta.size() != static_cast<std::size_t>(M) * k * p.nb())
    throw std::invalid_argument("ControlPolicy: coefficient array has wrong size");
  p.theta_ = std::move(theta);
  return p;
}

ControlPolicy ControlPolicy::open_loop(int k, int d, double T, int M, std::vector<double> values, ControlBox box) {
  check_dims(k, d);
  ControlPolicy p;
  p.mode_ = PolicyMode::OpenLoopGrid;
  p.k_ = k;
  p.d_ = d;
  p.M_ = M;
  p.T_ = T;
  p.box_ = std::move(box);
  if (values.size() != static_cast<std::size_t>(M) * k)
    throw std::invalid_argument("ControlPolicy: grid array has wrong size");
  p.theta_ = std::move(values);
  return p;
}

int ControlPolicy::node(double t) const {
  const int m = static_cast<int>(std::floor(t / T_ * M_ + 1e-9));
  return std::clamp(m, 0, M_ - 1);
}

void ControlPolicy::eval_raw(double t, const double* x, double a, double* u) const {
  const int m = node(t);
  if (mode_ == PolicyMode::OpenLoopGrid) {
    for (int c = 0; c < k_; ++c) u[c] = theta_[static_cast<std::size_t>(m) * k_ + c];
    return;
  }
  const int nb = basis_size(basis_, d_);
  double phi[64];
  eval_basis(basis_, d_, x, a, phi);
  for (int c = 0; c < k_; ++c) {
    const double* th = theta_.data() + (static_cast<std::size_t>(m) * k_ + c) * nb;
    double s = 0.0;
    for (int j = 0; j < nb; ++j) s += th[j] * phi[j];
    u[c] = s;
  }
}

void ControlPolicy::eval(double t, const double* x, double a, double* u) const {
  eval_raw(t, x, a, u);
  box_.project(u, k_);
}

void ControlPolicy::eval_grad(double t, const double* x, double a, double* ux, double* ua) const {
  std::fill(ux, ux + k_ * d_, 0.0);
  std::fill(ua, ua + k_, 0.0);
  if (mode_ == PolicyMode::OpenLoopGrid) return;
  const int m = node(t);
  const int nb = basis_size(basis_, d_);
  double dx[256], da[64];
  eval_basis_grad(basis_, d_, x, a, dx, da);
  for (int c = 0; c < k_; ++c) {
    const double* th = theta_.data() + (static_cast<std::size_t>(m) * k_ + c) * nb;
    for (int j = 0; j < nb; ++j) {
      for (int l = 0; l < d_; ++l) ux[c * d_ + l] += th[j] * dx[j * d_ + l];
      ua[c] += th[j] * da[j];
    }
  }
}

ControlPolicy ControlPolicy::axpy(double s, const ControlPolicy& o) const {
  if (o.mode_ != mode_ || o.basis_ != basis_ || o.k_ != k_ || o.d_ != d_ || o.T_ != T_)
    throw std::invalid_argument("ControlPolicy::axpy: incompatible policies");
  // bring both to the finer of the two node counts
  const int M = std::max(M_, o.M_);
  if (M % M_ != 0 || M % o.M_ != 0) throw std::invalid_argument("ControlPolicy::axpy: node counts do not nest");
  const int w = nb() * k_;
  ControlPolicy r = *this;
  r.M_ = M;
  r.theta_.assign(static_cast<std::size_t>(M) * w, 0.0);
  for (int m = 0; m < M; ++m) {
    const int m1 = m / (M / M_), m2 = m / (M / o.M_);
    for (int j = 0; j < w; ++j)
      r.theta_[static_cast<std::size_t>(m) * w + j] =
          theta_[static_cast<std::size_t>(m1) * w + j] + s * o.theta_[static_cast<std::size_t>(m2) * w + j];
  }
  return r;
}

double ControlPolicy::gain(int m, double a) const {
  if (mode_ != PolicyMode::FeedbackBasis || k_ != 1 || d_ != 1) return 0.0;
  const int nb = basis_size(basis_, 1);
  const double* th = theta_.data() + static_cast<std::size_t>(m) * nb;
  return th[1] + th[3] * a;
}

}  // namespace wmfc
