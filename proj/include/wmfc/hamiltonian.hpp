#pragma once

#include <vector>

#include "wmfc/model.hpp"

namespace wmfc {

// Adjoint arguments of the Hamiltonian at one point.
//   p (1), q (n), r (K), P (d), Q (d*n, row-major like sigma), R (K*d, mark-major)
struct AdjointArgs {
  const double* p;
  const double* q;
  const double* r;
  const double* P;
  const double* Q;
  const double* R;
};

struct HamiltonianInputs {
  double t = 0.0;
  std::vector<double> x;
  double a = 1.0;
  std::vector<double> m;
  std::vector<double> u;
  std::vector<double> p, q, r, P, Q, R;

  static HamiltonianInputs zeros(const Model& model);
  AdjointArgs args() const { return {p.data(), q.data(), r.data(), P.data(), Q.data(), R.data()}; }
  void check(const Model& model) const;
};

struct HamiltonianPartials {
  std::vector<double> Hx;  // d
  double Ha = 0.0;
  std::vector<double> Hu;  // k
  std::vector<double> Hm;  // J: dH/dm_j, so H_mu(.;x') = sum_j Hm_j g_j(x') over weighted features

  explicit HamiltonianPartials(const Model& model)
      : Hx(model.dims().d), Hu(model.dims().k), Hm(model.J()) {}
};

// H from coefficient values already in c
double hamiltonian_value(const Model& model, const Coeffs& c, double a, const AdjointArgs& adj);
// partials from coefficient partials already in c (c evaluated with derivs)
void hamiltonian_partials_from(const Model& model, const Coeffs& c, double a, const AdjointArgs& adj,
                               HamiltonianPartials& out);
// H_u only
void hamiltonian_u_from(const Model& model, const Coeffs& c, double a, const AdjointArgs& adj, double* Hu);

double hamiltonian(const Model& model, const HamiltonianInputs& in);
HamiltonianPartials hamiltonian_partials(const Model& model, const HamiltonianInputs& in);
// H_mu(theta; x') and H_{mu,1}(theta; x') for the weighted family
double hamiltonian_mu(const Model& model, const HamiltonianPartials& hp, const double* xp);
void hamiltonian_mu1(const Model& model, const HamiltonianPartials& hp, const double* xp, double* out);

}  // namespace wmfc
