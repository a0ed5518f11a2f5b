#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "wmfc/cloud.hpp"

namespace wmfc {

struct Atom {
  double weight;
  std::vector<double> x;
};

class WeightedMeasure {
 public:
  explicit WeightedMeasure(int d = 1) : d_(d) {}
  // weights are taken as given (already normalized)
  WeightedMeasure(int d, std::vector<Atom> atoms);
  // slice of a cloud at node m: weights A_i / N
  static WeightedMeasure from_cloud(const ParticleCloud& c, int m);

  int dim() const { return d_; }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  void add(double w, std::vector<double> x);
  double total_mass() const;

 private:
  int d_;
  std::vector<Atom> atoms_;
};

using TestFunction = std::function<double(const std::vector<double>&)>;

double pairing(const WeightedMeasure& mu, const TestFunction& f);

constexpr std::size_t kRhoDefaultCap = 1024;
constexpr std::size_t kRhoMaxCap = 4096;

// sup over 1-Lipschitz f with |f(x)| <= 1+|x| of |<mu1,f> - <mu2,f>|, d = 1 only.
double rho_distance(const WeightedMeasure& mu1, const WeightedMeasure& mu2, std::size_t cap = kRhoDefaultCap);

// E sup_m |dX|^p + (E sup_m |dA|^q)^(p/q) over paired particles.
double lpq_distance(const ParticleCloud& c1, const ParticleCloud& c2, double p = 2.0, double q = 1.5);

void write_measure_csv(std::ostream& os, const WeightedMeasure& mu);

// Dense tableau simplex: maximize c.s subject to A s <= b, s >= 0 with b >= 0.
// A is row-major rows x cols. Returns the optimum; s receives the maximizer.
double simplex_max(const std::vector<double>& A, const std::vector<double>& b, const std::vector<double>& c,
                   int rows, int cols, std::vector<double>* s = nullptr);

}  // namespace wmfc
