#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmfc/adjoint.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/model.hpp"
#include "wmfc/parallel.hpp"
#include "wmfc/policy.hpp"

namespace wmfc {

struct OptimizeRecord {
  int iter;
  double J, se, Hu_norm, step;
  int backtracks;
};

class StallError : public std::runtime_error {
 public:
  StallError(const std::string& what, std::vector<OptimizeRecord> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<OptimizeRecord>& trace() const { return trace_; }

 private:
  std::vector<OptimizeRecord> trace_;
};

struct OptimizeOptions {
  int iters = 50;
  double step = 0.5;
  double tol = 0.0;          // stop once the stationarity residual is at or below tol
  double rel_tol = 0.0;      // ... or at or below rel_tol times its starting value
  double armijo_c = 1e-4;
  int max_backtracks = 8;
  int stall_limit = 5;       // consecutive exhausted line searches
  BasisKind basis = BasisKind::Default;
  AdjointOptions adjoint;
};

struct OptimizeResult {
  ControlPolicy policy;
  std::vector<OptimizeRecord> trace;
  bool converged = false;
};

// Policy with one node per grid step in the requested mode/basis, reproducing `p` on that grid.
ControlPolicy expand_policy(const ControlPolicy& p, int M, BasisKind basis);

OptimizeResult pontryagin_descent(const Model& model, const ControlPolicy& init, const TimeGrid& grid,
                                  const SimOptions& sim, const OptimizeOptions& opt = {});

MeanStd evaluate_cost(const Model& model, const ControlPolicy& policy, const TimeGrid& grid, const SimOptions& sim);

// theta entries i.i.d. N(0,1) from the Directions stream, one node, same basis
ControlPolicy random_direction(const ControlPolicy& like, std::uint64_t seed, int index);

struct ProbeRow {
  int direction;
  double eps;
  double J, J_bar, se_bar, diff, diff_se;
  bool violation;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;
  int violations = 0;
};

// violation when J(u + eps v) < J(u) - 3 se(J(u)); the paired difference stderr is reported alongside
ProbeReport sufficiency_probe(const Model& model, const ControlPolicy& policy, const TimeGrid& grid,
                              const SimOptions& sim, int num_dirs, const std::vector<double>& eps_list = {0.05, 0.1},
                              std::uint64_t dir_seed = 7);

}  // namespace wmfc
