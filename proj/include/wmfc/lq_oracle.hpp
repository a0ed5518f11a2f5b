#pragma once

#include <stdexcept>
#include <vector>

#include "wmfc/model.hpp"

namespace wmfc {

class HorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// E[A(t)] = a e^{alpha t}
double weight_mean(const LQParams& p, double t);

// m(t) = E[A X(t)] from m' = (alpha + b11 + s11 beta) m + (b12 + s12 beta) a e^{alpha t} m, m(0) = x a,
// chained across the pieces of the coefficients
double mean_flow(const LQParams& p, double t);

struct RiccatiSolution {
  std::vector<double> t, phi, gain;  // on the M+1 grid nodes
  double J = 0.0;                    // phi(0) x^2
};

// Decoupled case (b12 = s12 = alpha = beta = 0, a = 1, no jumps). With P = 2 phi X:
//   phi' + (2 b11 + s11^2) phi + R1 - phi^2 (b13 + s11 s13)^2 / (R2 + phi s13^2) = 0,  phi(T) = Phi
//   u = g X,  g = -phi (b13 + s11 s13) / (R2 + phi s13^2)
RiccatiSolution riccati(const LQParams& p, double T, int M, int substeps = 64);

}  // namespace wmfc
