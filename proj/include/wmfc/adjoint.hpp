#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmfc/cloud.hpp"
#include "wmfc/model.hpp"
#include "wmfc/variational.hpp"

namespace wmfc {

class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdjointStepDiag {
  int step;
  double cond_number;
  double residual_norm;   // RMS of the one-step martingale residual
  double residual_mean;   // its MC mean over particles, all components pooled per step
  double residual_se;
  int rank;
  std::vector<int> dropped;
};

// Step-major like ParticleCloud. p, P on nodes 0..M; q, r, Q, R and the
// conditional expectations ph = E_m[p_{m+1}], Ph = E_m[P_{m+1}] on steps 0..M-1.
struct AdjointCloud {
  int M = 0;
  std::size_t N = 0;
  int d = 1, n = 1, K = 0;
  std::vector<double> p, P;    // (M+1)*N, (M+1)*N*d
  std::vector<double> q, Q;    // M*N*n, M*N*d*n
  std::vector<double> r, R;    // M*N*K, M*N*K*d
  std::vector<double> ph, Ph;  // M*N, M*N*d
  std::vector<std::string> basis;
  std::vector<AdjointStepDiag> diag;

  const double* P_at(int m, std::size_t i) const { return P.data() + (static_cast<std::size_t>(m) * N + i) * d; }
};

struct AdjointOptions {
  double ridge = 1e-10;
  double min_events = 30.0;  // expected jumps per regression before pooling kicks in
  bool strict = false;       // rank deficiency throws instead of dropping basis columns
  bool pairwise = false;     // E' terms by direct double sums (N <= 2048)
};

// Regress-later LSMC sweep m = M-1..0 on basis {1, x_l, a, x_l a, x_l^2, a^2}.
AdjointCloud solve_adjoint(const Model& model, const ParticleCloud& base, const AdjointOptions& opt = {});

// H_u(theta_m) per particle with the adjoint arguments stored for step m: M*N*k
std::vector<double> hamiltonian_u_path(const Model& model, const ParticleCloud& base, const AdjointCloud& adj);

// lhs = E[p(T) B(T) + <P(T), Y(T)>], rhs = E of the dt-integrated right side.
// abs_diff = |lhs - martingale - rhs|, where `martingale` is the mean of the
// discrete stochastic integrals in the product rule (zero in expectation); taking
// them out pathwise leaves the discretization error instead of Monte Carlo noise.
struct DualityReport {
  double lhs = 0.0, rhs = 0.0, martingale = 0.0, abs_diff = 0.0, se = 0.0;
};

DualityReport duality_check(const Model& model, const ParticleCloud& base, const AdjointCloud& adj,
                            const VariationalCloud& var);

void write_adjoint_csv(std::ostream& os, const AdjointCloud& adj, std::size_t max_particles);
void write_adjoint_diagnostics(std::ostream& os, const AdjointCloud& adj);

}  // namespace wmfc
