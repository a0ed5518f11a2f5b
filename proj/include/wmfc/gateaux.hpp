#pragma once

#include <vector>

#include "wmfc/adjoint.hpp"
#include "wmfc/cloud.hpp"
#include "wmfc/forward.hpp"
#include "wmfc/model.hpp"
#include "wmfc/policy.hpp"

namespace wmfc {

enum class GateauxMode { Adjoint, Variational, FD };

struct GateauxResult {
  double value = 0.0;
  double se = 0.0;
  double trunc = 0.0;           // FD only: truncation estimate 2|FD(eps) - FD(eps/2)|
  std::vector<double> samples;  // per particle
};

GateauxResult summarize(std::vector<double> samples);

// Each route works on a base cloud simulated under the closed-loop policy; the
// direction v is taken as a control process along that base path.
GateauxResult gateaux_adjoint(const Model& model, const ParticleCloud& base, const std::vector<double>& Hu_path,
                              const std::vector<double>& v_path);
GateauxResult gateaux_variational(const Model& model, const ParticleCloud& base, const ControlPolicy& direction);
// [J(u + eps v) - J(u)] / eps per particle, common noise; one extra run at eps/2 for `trunc`
GateauxResult gateaux_fd(const Model& model, const ParticleCloud& base, const std::vector<double>& v_path, double eps);

GateauxResult gateaux_derivative(const Model& model, const ControlPolicy& policy_bar, const ControlPolicy& direction,
                                 const TimeGrid& grid, const SimOptions& sim, GateauxMode mode, double eps = 1e-4,
                                 const AdjointOptions& aopt = {});

// L2(dt x dP) norm of the projected stationarity defect u - Proj(u - H_u); equals |H_u| without a box
double smp_residual(const Model& model, const ParticleCloud& base, const AdjointCloud& adj,
                    const ControlPolicy& policy_bar);
// same, from a precomputed H_u path (M*N*k)
double smp_residual(const ParticleCloud& base, const std::vector<double>& Hu, const ControlPolicy& policy_bar);

}  // namespace wmfc
