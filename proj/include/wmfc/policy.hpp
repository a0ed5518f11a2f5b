#pragma once

#include <vector>

namespace wmfc {

enum class PolicyMode { OpenLoopGrid, FeedbackBasis };
// Default spans {1, x_1..x_d, a, x_1 a..x_d a}; Quadratic adds x_l^2 and a^2.
enum class BasisKind { Default, Quadratic };

struct ControlBox {
  bool bounded = false;
  std::vector<double> lo, hi;

  static ControlBox unbounded() { return {}; }
  static ControlBox uniform(int k, double lo, double hi);
  void project(double* u, int k) const;
  bool contains(const double* u, int k, double tol = 0.0) const;
};

int basis_size(BasisKind kind, int d);
void eval_basis(BasisKind kind, int d, const double* x, double a, double* out);
// partials of the basis functions: dx (nb x d, row-major) and da (nb)
void eval_basis_grad(BasisKind kind, int d, const double* x, double a, double* dx, double* da);

// A control u(t,x,a). Time is piecewise constant over `M` equal nodes on [0,T],
// so a policy may be evaluated on any grid over the same horizon.
class ControlPolicy {
 public:
  ControlPolicy() = default;
  static ControlPolicy constant(int k, int d, double value, double T, ControlBox box = {},
                                PolicyMode mode = PolicyMode::FeedbackBasis, BasisKind basis = BasisKind::Default);
  static ControlPolicy feedback(int k, int d, double T, int M, BasisKind basis, std::vector<double> theta,
                                ControlBox box = {});
  static ControlPolicy open_loop(int k, int d, double T, int M, std::vector<double> values, ControlBox box = {});

  PolicyMode mode() const { return mode_; }
  BasisKind basis() const { return basis_; }
  int k() const { return k_; }
  int d() const { return d_; }
  int nodes() const { return M_; }
  double horizon() const { return T_; }
  int nb() const { return mode_ == PolicyMode::FeedbackBasis ? basis_size(basis_, d_) : 1; }
  const ControlBox& box() const { return box_; }
  void set_box(ControlBox b) { box_ = std::move(b); }

  // theta[(node*k + c)*nb + j] in feedback mode, values[node*k + c] on the grid
  const std::vector<double>& params() const { return theta_; }
  std::vector<double>& params() { return theta_; }

  int node(double t) const;
  // raw value (no projection)
  void eval_raw(double t, const double* x, double a, double* u) const;
  // projected into the box
  void eval(double t, const double* x, double a, double* u) const;
  // du/dx (k x d row-major) and du/da (k) of the raw value
  void eval_grad(double t, const double* x, double a, double* ux, double* ua) const;

  // linear combination (same layout required): this + s * other
  ControlPolicy axpy(double s, const ControlPolicy& other) const;
  // feedback slope du/dx for k = d = 1 at weight a (sum of the x and x*a terms)
  double gain(int node, double a) const;

 private:
  PolicyMode mode_ = PolicyMode::FeedbackBasis;
  BasisKind basis_ = BasisKind::Default;
  int k_ = 1, d_ = 1, M_ = 1;
  double T_ = 1.0;
  std::vector<double> theta_;
  ControlBox box_;
};

}  // namespace wmfc
