#pragma once

// Shared parameter sets and test-local models.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "wmfc/model.hpp"

namespace fx {

// weighted mean-field LQ satisfying b13 + beta*sigma13 = 0
inline wmfc::LQParams coupled_lq() {
  wmfc::LQParams p;
  p.b11 = -0.3;
  p.b12 = 0.2;
  p.b13 = -0.2;
  p.s11 = 0.2;
  p.s12 = 0.1;
  p.s13 = 0.5;
  p.alpha = 0.05;
  p.beta = 0.4;
  p.R1 = 1.0;
  p.R2 = 1.0;
  p.Phi = 1.0;
  p.x = 1.0;
  p.a = 1.0;
  return p;
}

inline wmfc::LQParams decoupled_lq() {
  wmfc::LQParams p;
  p.b11 = -0.3;
  p.b13 = -0.2;
  p.s11 = 0.2;
  p.s13 = 0.5;
  p.R1 = 1.0;
  p.R2 = 1.0;
  p.Phi = 1.0;
  p.decoupled_baseline = true;
  return p;
}

inline std::vector<wmfc::Mark> two_marks() { return {{0.2, 1.0}, {-0.15, 0.5}}; }

inline wmfc::ModelPtr builtin(const std::string& name) {
  if (name == "lq") return wmfc::make_lq_model(coupled_lq());
  if (name == "mean_variance") {
    wmfc::MeanVarianceParams p;
    p.b_mu = 0.05;
    p.sigma_mu = 0.05;
    p.jumps = wmfc::JumpSpec(two_marks());
    p.gamma = {0.1, -0.05};
    p.alpha = 0.02;
    p.beta = 0.1;
    return wmfc::make_mean_variance_model(p);
  }
  if (name == "weight_const") {
    wmfc::WeightConstParams p;
    p.jumps = wmfc::JumpSpec(two_marks());
    return wmfc::make_weight_const_model(p);
  }
  if (name == "trivial") return wmfc::make_trivial_model();
  if (name == "toy") return wmfc::make_toy_model();
  return wmfc::make_toy2d_model();
}

// b = x^2: unbounded derivative, must fail the Lipschitz probe
class QuadDrift final : public wmfc::Model {
 public:
  QuadDrift() {
    dims_ = {1, 1, 1};
    x0_ = {0.5};
    lip_ = 1.0;
  }
  std::string name() const override { return "quad_drift"; }
  void eval(double, const double* x, double, const double*, const double* u, wmfc::Coeffs& c,
            bool derivs) const override {
    c.b[0] = x[0] * x[0] + u[0];
    c.sig[0] = 0.1;
    c.f = u[0] * u[0];
    if (!derivs) return;
    c.b_x[0] = 2.0 * x[0];
    c.b_u[0] = 1.0;
    c.f_u[0] = 2.0 * u[0];
  }
  void terminal(const double*, double, const double*, wmfc::TerminalCoeffs&) const override {}
  double feature(int, const double*, double*) const override { return 0.0; }
};

// gamma = -1 at the second mark: 1 + gamma = 0 breaks uniform positivity
class DeadJump final : public wmfc::Model {
 public:
  DeadJump() {
    dims_ = {1, 1, 1};
    jumps_ = wmfc::JumpSpec({{0.1, 1.0}, {-1.0, 0.5}});
    x0_ = {0.0};
    k_floor_ = 0.5;
  }
  std::string name() const override { return "dead_jump"; }
  void eval(double, const double*, double, const double*, const double* u, wmfc::Coeffs& c,
            bool derivs) const override {
    c.b[0] = u[0];
    c.gam[0] = 0.1;
    c.gam[1] = -1.0;
    c.f = u[0] * u[0];
    if (!derivs) return;
    c.b_u[0] = 1.0;
    c.f_u[0] = 2.0 * u[0];
  }
  void terminal(const double*, double, const double*, wmfc::TerminalCoeffs&) const override {}
  double feature(int, const double*, double*) const override { return 0.0; }
};

// zero dynamics, f = running, Phi = phi_a * a
class Flat final : public wmfc::Model {
 public:
  Flat(double running, double phi_a) : f_(running), pa_(phi_a) {
    dims_ = {1, 1, 1};
    x0_ = {0.3};
    a0_ = 1.5;
  }
  std::string name() const override { return "flat"; }
  void eval(double, const double*, double, const double*, const double*, wmfc::Coeffs& c, bool) const override {
    c.f = f_;
  }
  void terminal(const double*, double a, const double*, wmfc::TerminalCoeffs& tc) const override {
    tc.Phi = pa_ * a;
    tc.Phi_a = pa_;
  }
  double feature(int, const double*, double*) const override { return 0.0; }

 private:
  double f_, pa_;
};

}  // namespace fx
