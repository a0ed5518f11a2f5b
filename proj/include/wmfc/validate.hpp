#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmfc/model.hpp"

namespace wmfc {

struct ProbeSpec {
  double x_radius = 2.0;  // |x_l| <= x_radius
  double u_lo = -2.0, u_hi = 2.0;
  double a_lo = 0.5, a_hi = 2.0;
  int probes = 200;
  std::uint64_t seed = 11;
};

struct HypothesisRow {
  std::string condition;
  double empirical;
  double declared;
  bool pass;
};

struct HypothesisReport {
  std::vector<HypothesisRow> rows;
  bool passed() const;
};

// Empirical Lipschitz/growth/boundedness constants of the dynamics coefficients
// against the model's declared bound, plus the 1 + gamma >= k_floor floor.
// Measure distances are rho over random atomic measures (d = 1); for d > 1 the
// measure part is probed in feature space and reported as such.
HypothesisReport validate_hypotheses(const Model& model, const ProbeSpec& spec = {});

struct DerivativeFailure {
  std::string evaluator;  // e.g. "b_x[0]" or "f_u[0]"
  int probe;
  double analytic, fd, err;
};

struct DerivativeReport {
  int checks = 0;
  std::vector<DerivativeFailure> failures;
  bool passed() const { return failures.empty(); }
  std::string summary() const;
};

// Central differences of every coefficient in (x, a, u, features), of Phi and of
// the features; measure derivatives through the definition with eps in {1e-2, 1e-3}.
DerivativeReport check_derivatives(const Model& model, double tol = 1e-6, int probes = 100, std::uint64_t seed = 5);

}  // namespace wmfc
