#pragma once

#include <vector>

#include "wmfc/cloud.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/model.hpp"
#include "wmfc/policy.hpp"

namespace wmfc {

// How the perturbation direction enters.
//  OpenLoop:   control process u = u_bar + eps*v, v evaluated along the base path (fixed process)
//  ClosedLoop: feedback policy u_bar + eps*v evaluated on the perturbed state, so the
//              variational control picks up u_bar_x Y + u_bar_a B
enum class Perturbation { OpenLoop, ClosedLoop };

struct VariationalCloud {
  int M = 0;
  std::size_t N = 0;
  int d = 1, k = 1, J = 0;
  std::vector<double> Y;      // (M+1)*N*d
  std::vector<double> Btilde; // (M+1)*N
  std::vector<double> B;      // (M+1)*N, equals A * Btilde
  std::vector<double> dm;     // (M+1)*J, first-order change of each feature
  std::vector<double> v;      // M*N*k, control variation actually applied

  const double* y(int m, std::size_t i) const { return Y.data() + (static_cast<std::size_t>(m) * N + i) * d; }
  double b(int m, std::size_t i) const { return B[static_cast<std::size_t>(m) * N + i]; }
  const double* vel(int m, std::size_t i) const { return v.data() + (static_cast<std::size_t>(m) * N + i) * k; }
};

struct VariationalOptions {
  Perturbation mode = Perturbation::OpenLoop;
  bool pairwise = false;  // O(N^2) cross averages through the kernel evaluators
  std::size_t pairwise_cap = 2048;
};

// v evaluated (unprojected) along the base path: M*N*k
std::vector<double> direction_path(const ControlPolicy& v, const ParticleCloud& base);

// policy_bar is only consulted in ClosedLoop mode
VariationalCloud simulate_variational(const Model& model, const ParticleCloud& base, const ControlPolicy* policy_bar,
                                      const ControlPolicy& direction, const VariationalOptions& opt = {});

// perturbed self-consistent run under u_bar + eps v (same noise as base)
ParticleCloud perturbed_cloud(const Model& model, const ParticleCloud& base, const ControlPolicy& policy_bar,
                              const ControlPolicy& direction, const std::vector<double>* v_path, double eps,
                              Perturbation mode);

// E sup_m |X^eps - X_bar|^2
double linearization_error(const ParticleCloud& pert, const ParticleCloud& base);

struct ConvergenceRow {
  double eps, D, err_X, err_A;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool decreasing = false;
};

// D(eps) = E sup|Y^eps - Y|^2 + (E sup|B^eps - B|^q)^(2/q)
ConvergenceReport convergence_check(const Model& model, const ParticleCloud& base, const ControlPolicy& policy_bar,
                                    const ControlPolicy& direction, const std::vector<double>& eps_list,
                                    const VariationalOptions& opt = {}, double q = 1.5);

}  // namespace wmfc
