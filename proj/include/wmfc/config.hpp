#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmfc/model.hpp"
#include "wmfc/policy.hpp"

namespace wmfc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` file. Values are JSON literals (numbers, booleans, strings,
// arrays); a bare word is read as a string. `#` starts a comment.
struct ExperimentConfig {
  std::string model_kind = "lq";
  LQParams lq;
  MeanVarianceParams mv;
  WeightConstParams wc;
  double toy_coupling = 0.8;
  std::vector<Mark> marks;

  double T = 1.0;
  int M = 128;
  std::size_t N = 100000;
  std::uint64_t seed = 1;

  double picard_tol = 1e-10;
  int picard_max_iter = 20;

  int opt_iters = 50;
  double opt_step = 0.5;
  double opt_tol = 0.0;
  double opt_rel_tol = 0.0;

  std::string control_mode = "feedback";  // feedback | open_loop
  std::optional<std::pair<double, double>> control_box;
  double control_init = 1.0;
  std::string control_basis = "default";  // default | quadratic

  std::vector<double> var_eps{0.2, 0.1, 0.05};
  std::string var_perturbation = "closed_loop";  // closed_loop | open_loop
  std::string var_direction = "random-basis";    // constant | random-basis
  double gateaux_eps = 1e-4;
  int gateaux_directions = 5;

  std::vector<std::pair<double, double>> rho_mu1{{1.0, 0.0}}, rho_mu2{{1.0, 0.5}};  // (weight, x)

  std::string output_dir = "out";

  // resolved key/value pairs (canonical JSON text), the input to the config hash
  std::map<std::string, std::string> resolved;
};

std::vector<std::string> config_keys();

// parse text, then apply `key=value` overrides (same value syntax)
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

// FNV-1a over the sorted resolved pairs
std::uint64_t config_hash(const ExperimentConfig& c);

ModelPtr build_model(const ExperimentConfig& c);
ControlPolicy initial_policy(const ExperimentConfig& c, const Model& model);
ControlBox control_box(const ExperimentConfig& c, int k);
BasisKind control_basis(const ExperimentConfig& c);

}  // namespace wmfc
