#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmfc {

struct Mark {
  double z;
  double lambda;
};

struct JumpSpec {
  std::vector<Mark> marks;

  JumpSpec() = default;
  explicit JumpSpec(std::vector<Mark> m);
  int size() const { return static_cast<int>(marks.size()); }
  double total_intensity() const;
  std::vector<double> lambdas() const;
};

// Weighted features pair with mu = E[A delta_X]; plain ones with the law of X.
enum class FeatureKind { Weighted, Plain };

struct Feature {
  FeatureKind kind;
  std::string name;
};

struct Dims {
  int d = 1;  // state
  int n = 1;  // Brownian
  int k = 1;  // control
};

// Values and partials of every coefficient at one point. Layout (row-major):
//   b[i], b_x[i*d+l], b_u[i*k+c], b_m[i*J+j]
//   sig[i*n+j] is component i of column j; sig_x[(i*n+j)*d+l], sig_u[(i*n+j)*k+c], sig_m[(i*n+j)*J+jj]
//   beta[j], beta_x[j*d+l], beta_u[j*k+c], beta_m[j*J+jj]
//   eta[q*d+i], eta_x[(q*d+i)*d+l], eta_u[(q*d+i)*k+c] for mark q
//   gam[q], gam_x[q*d+l], gam_u[q*k+c]
struct Coeffs {
  int d, n, k, J, K;
  std::vector<double> b, b_x, b_u, b_m;
  std::vector<double> sig, sig_x, sig_u, sig_m;
  double alpha = 0.0;
  std::vector<double> alpha_x, alpha_u, alpha_m;
  std::vector<double> beta, beta_x, beta_u, beta_m;
  std::vector<double> eta, eta_x, eta_u;
  std::vector<double> gam, gam_x, gam_u;
  double f = 0.0, f_a = 0.0;
  std::vector<double> f_x, f_u, f_m;

  Coeffs(int d, int n, int k, int J, int K);
  void zero();
};

struct TerminalCoeffs {
  double Phi = 0.0, Phi_a = 0.0;
  std::vector<double> Phi_x, Phi_m;

  TerminalCoeffs(int d, int J) : Phi_x(d, 0.0), Phi_m(J, 0.0) {}
  void zero();
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The coefficient bundle. Measure dependence enters only through the declared
// features m_j; the measure derivative of a coefficient phi is then
//   phi_mu(theta; x') = sum_j d phi/d m_j * g_j(x'),  phi_{mu,1} = sum_j d phi/d m_j * grad g_j(x').
// All evaluators are pure.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  const Dims& dims() const { return dims_; }
  const JumpSpec& jumps() const { return jumps_; }
  const std::vector<Feature>& features() const { return features_; }
  int J() const { return static_cast<int>(features_.size()); }
  int K() const { return jumps_.size(); }

  const std::vector<double>& x0() const { return x0_; }
  double a0() const { return a0_; }
  double k_floor() const { return k_floor_; }
  // declared constant for the hypothesis probes
  double lipschitz_bound() const { return lip_; }
  bool convex() const { return convex_; }
  bool separable() const { return true; }

  Coeffs make_coeffs() const { return Coeffs(dims_.d, dims_.n, dims_.k, J(), K()); }
  TerminalCoeffs make_terminal() const { return TerminalCoeffs(dims_.d, J()); }

  // Fills c (already zeroed by the caller). Without `derivs` only the values
  // b, sig, alpha, beta, eta, gam, f are required.
  virtual void eval(double t, const double* x, double a, const double* m, const double* u, Coeffs& c,
                    bool derivs) const = 0;
  virtual void terminal(const double* x, double a, const double* m, TerminalCoeffs& tc) const = 0;
  // g_j(x); grad (length d) may be null
  virtual double feature(int j, const double* x, double* grad) const = 0;

  // Kernels assembled from the features of one family: sum_j dphi_dm[j] g_j(x')
  // and its x'-gradient. With kind = Weighted this is phi_mu and phi_{mu,1}.
  double mu_kernel(const double* dphi_dm, const double* xp, FeatureKind kind) const;
  void mu1_kernel(const double* dphi_dm, const double* xp, FeatureKind kind, double* out) const;

 protected:
  Dims dims_;
  JumpSpec jumps_;
  std::vector<Feature> features_;
  std::vector<double> x0_{0.0};
  double a0_ = 1.0;
  double k_floor_ = 1.0;
  double lip_ = 1.0;
  bool convex_ = false;
};

using ModelPtr = std::shared_ptr<const Model>;

// ---- built-in models ----

// piecewise-constant function of time on [0,T]: value[i] holds on [knots[i], knots[i+1])
struct PiecewiseConstant {
  std::vector<double> knots{0.0};
  std::vector<double> values{0.0};

  PiecewiseConstant() = default;
  PiecewiseConstant(double v) : values{v} {}  // NOLINT(implicit)
  double operator()(double t) const;
  double max_abs() const;
};

struct LQParams {
  PiecewiseConstant b11, b12, b13, s11, s12, s13;
  double alpha = 0.0, beta = 0.0;
  double R1 = 0.0, R2 = 1.0, Phi = 0.0;
  double x = 1.0, a = 1.0;
  // waives b13 + beta*s13 = 0 for the classical decoupled baseline
  // (b12 = s12 = alpha = beta = 0, a = 1); any other params still get checked
  bool decoupled_baseline = false;

  bool decoupled() const;
};

ModelPtr make_lq_model(const LQParams& p);

struct MeanVarianceParams {
  double r = 0.03;
  double b0 = 0.08, b_mu = 0.0;          // excess-return drift b(t,m) = b0 + b_mu tanh(<mu,iota>)
  double sigma0 = 0.2, sigma_mu = 0.0;   // sigma(t,m) = sigma0 + sigma_mu tanh(<mu,iota>)
  JumpSpec jumps;                        // eta(z) = z
  std::vector<double> gamma;             // per mark, constant
  double alpha = 0.0, beta = 0.0;
  double lambda_mv = 1.0;
  double x = 1.0, a = 1.0;
};

ModelPtr make_mean_variance_model(const MeanVarianceParams& p);

struct WeightConstParams {
  double alpha = 0.05;
  std::vector<double> beta{0.3};  // length n
  JumpSpec jumps;                 // gamma(z) = z
  double sigma = 0.2;
  double x = 0.5, a = 1.0;
};

ModelPtr make_weight_const_model(const WeightConstParams& p);

// b = u, sigma = 0, f = u^2, Phi = 0, no weight dynamics
ModelPtr make_trivial_model();
// smooth scalar model: tanh coupling in a weighted mean and a plain feature, weights, two marks
ModelPtr make_toy_model(double coupling = 0.8);
// two-dimensional smooth model (d = n = 2, k = 1, one mark)
ModelPtr make_toy2d_model();
// wraps a model and reports f_u doubled
ModelPtr make_planted_fault_model(ModelPtr base);

std::vector<std::string> builtin_model_names();

}  // namespace wmfc
