#pragma once

// Independent reference computations for the tests. Nothing here calls into the
// solvers it is used to check.

#include <utility>
#include <vector>

#include "wmfc/model.hpp"

namespace oracle {

// E[A(T)^p] for constant alpha, beta, gamma: A is a stochastic exponential, so
// A^p = a^p exp(p log A) and the compensator of each mark contributes
// lambda ((1+g)^p - 1 - p g).
double weight_moment(double a, double alpha, const std::vector<double>& beta, const std::vector<wmfc::Mark>& marks,
                     double p, double T);

// sup over admissible f of sum c_k f(p_k), exact, by dynamic programming along the
// sorted support over the lattice of values an LP vertex can take.
// atoms are (weight, x); returns rho(mu1, mu2)
double rho_bruteforce(const std::vector<std::pair<double, double>>& mu1,
                      const std::vector<std::pair<double, double>>& mu2);

// Deterministic LQ: dx = u dt, cost int (R1 x^2 + R2 u^2) dt + Phi x(T)^2.
// Euler-Lagrange system solved by linear shooting on the costate with RK4.
double textbook_lq_cost(double R1, double R2, double Phi, double x0, double T, int steps = 20000);

// m' = (alpha + b11 + s11 beta) m + (b12 + s12 beta) a e^{alpha t} m by RK4, constant coefficients
double mean_flow_rk4(double alpha, double beta, double b11, double b12, double s11, double s12, double x, double a,
                     double t, int steps = 20000);

// E[X_M^2] of the Euler chain X_{m+1} = X_m (1 + b dt + s dW), exact recursion
double euler_second_moment(double b, double s, double x, double T, int M);

// forward RK4 of phi' = -[(2 b11 + s11^2) phi + R1 - phi^2 c^2 / (R2 + phi s13^2)] from phi(0),
// c = b13 + s11 s13; returns phi(T)
double riccati_forward(double b11, double s11, double b13, double s13, double R1, double R2, double phi0, double T,
                       int steps = 200000);

}  // namespace oracle
