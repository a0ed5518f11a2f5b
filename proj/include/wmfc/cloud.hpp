#pragma once

#include <cstdint>
#include <vector>

namespace wmfc {

struct TimeGrid {
  double T = 1.0;
  int M = 128;

  TimeGrid() = default;
  TimeGrid(double T_, int M_);
  double dt() const { return T / M; }
  double t(int m) const { return T * m / M; }
};

// Feature values <mu(t_m), g_j> per node, row m of length J.
struct MeasureFlow {
  int M = 0;
  int J = 0;
  std::vector<double> values;  // (M+1) * J

  MeasureFlow() = default;
  MeasureFlow(int M_, int J_) : M(M_), J(J_), values(static_cast<std::size_t>(M_ + 1) * J_, 0.0) {}
  const double* at(int m) const { return values.data() + static_cast<std::size_t>(m) * J; }
  double* at(int m) { return values.data() + static_cast<std::size_t>(m) * J; }
};

// Step-major storage: entry (m, i) of a per-particle quantity lives at m*N + i.
struct ParticleCloud {
  TimeGrid grid;
  std::size_t N = 0;
  int d = 1, n = 1, k = 1, K = 0;
  std::uint64_t seed = 0;
  int refine = 1;  // coarse step = `refine` fine noise steps
  std::vector<double> X;     // (M+1)*N*d
  std::vector<double> logA;  // (M+1)*N
  std::vector<double> A;     // (M+1)*N
  std::vector<double> U;     // M*N*k, control actually applied on [t_m, t_{m+1})
  MeasureFlow flow;          // flow the coefficients saw

  const double* x(int m, std::size_t i) const { return X.data() + (static_cast<std::size_t>(m) * N + i) * d; }
  double* x(int m, std::size_t i) { return X.data() + (static_cast<std::size_t>(m) * N + i) * d; }
  double a(int m, std::size_t i) const { return A[static_cast<std::size_t>(m) * N + i]; }
  const double* u(int m, std::size_t i) const { return U.data() + (static_cast<std::size_t>(m) * N + i) * k; }
  double* u(int m, std::size_t i) { return U.data() + (static_cast<std::size_t>(m) * N + i) * k; }
};

}  // namespace wmfc
