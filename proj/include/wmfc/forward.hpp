#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmfc/cloud.hpp"
#include "wmfc/model.hpp"
#include "wmfc/policy.hpp"
#include "wmfc/rng.hpp"

namespace wmfc {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Where the control on [t_m, t_{m+1}) comes from.
//  closed loop: u = Proj(policy(t, X, A) + eps * direction(t, X, A))
//  open loop:   u = base.U(m,i) + eps * v_path(m,i), the perturbation of a control process
struct ControlSpec {
  const ControlPolicy* policy = nullptr;
  const ControlPolicy* direction = nullptr;
  const ParticleCloud* base = nullptr;
  const std::vector<double>* v_path = nullptr;
  double eps = 0.0;

  static ControlSpec closed_loop(const ControlPolicy& p, const ControlPolicy* dir = nullptr, double eps = 0.0);
  static ControlSpec open_loop(const ParticleCloud& base, const std::vector<double>* v_path = nullptr,
                               double eps = 0.0);
  void control(int m, std::size_t i, double t, const double* x, double a, int k, double* u) const;
};

struct SimOptions {
  std::size_t N = 10000;
  std::uint64_t seed = 1;
  int refine = 1;  // noise generated on a grid `refine` times finer
};

NoiseSource make_noise(const Model& model, const TimeGrid& grid, const SimOptions& opt);

// Euler-Maruyama for X, log-Euler for A, coefficients frozen on the given flow.
ParticleCloud simulate_forward(const Model& model, const ControlSpec& ctl, const MeasureFlow& flow,
                               const TimeGrid& grid, const SimOptions& opt);

// Same scheme with the flow read off the cloud at every node (the fixed point of
// the Picard map for the finite cloud).
ParticleCloud simulate_self_consistent(const Model& model, const ControlSpec& ctl, const TimeGrid& grid,
                                       const SimOptions& opt);

void features_at(const Model& model, const ParticleCloud& c, int m, double* out);
MeasureFlow features_of(const Model& model, const ParticleCloud& c);
// flow held at the deterministic initial features
MeasureFlow initial_flow(const Model& model, const TimeGrid& grid);

double weight_moment_bound(const ParticleCloud& c, double p);

struct PicardRow {
  int iter;
  double sup_feature_delta;
  double lpq_p, lpq_q, lpq_value;
};

struct PicardResult {
  MeasureFlow flow;
  ParticleCloud cloud;
  std::vector<PicardRow> trace;
  int iterations = 0;
  bool converged = false;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<PicardRow> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<PicardRow>& trace() const { return trace_; }

 private:
  std::vector<PicardRow> trace_;
};

// Iteration n simulates under flow^n (common noise) and sets flow^{n+1} to the
// cloud's features; stops once sup_m sum_j |flow^{n+1} - flow^n| <= tol.
PicardResult picard_measure_flow(const Model& model, const ControlSpec& ctl, const TimeGrid& grid,
                                 const SimOptions& opt, double tol, int max_iter, const MeasureFlow* init = nullptr,
                                 double lpq_p = 2.0, double lpq_q = 1.5);

// per-particle cost sum_m dt f + Phi on an existing cloud
std::vector<double> particle_costs(const Model& model, const ParticleCloud& c);

}  // namespace wmfc
