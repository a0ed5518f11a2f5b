#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace wmfc {

using Philox4x32Ctr = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al. counter-based family).
Philox4x32Ctr philox4x32_10(Philox4x32Ctr ctr, Philox4x32Key key);

// Reserved stream ids. The stream goes into the top byte of the fourth counter word.
enum class Stream : std::uint32_t { Dynamics = 0, Directions = 1, Probes = 2, Aux = 3 };

// Sequential draws from the Philox output keyed by (seed, particle, step, stream).
// Two generators with equal keys produce equal sequences on any thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t particle, std::uint32_t step, Stream stream = Stream::Dynamics);

  std::uint32_t next_u32();
  // uniform on the open interval (0,1)
  double uniform();
  double normal();
  // Poisson count by inversion; mean is expected to be moderate (lambda*dt style).
  int poisson(double mean);

 private:
  void refill();

  Philox4x32Key key_;
  Philox4x32Ctr ctr_;
  Philox4x32Ctr buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Regenerates Brownian increments and per-mark jump counts for a particle on a
// coarse step. The fine grid has M_fine steps; a coarse step aggregates `refine`
// consecutive fine steps so that coarser grids see summed fine noise.
class NoiseSource {
 public:
  NoiseSource() = default;
  NoiseSource(std::uint64_t seed, int n, std::vector<double> lambdas, double T, int M_fine);

  std::uint64_t seed() const { return seed_; }
  int n() const { return n_; }
  int marks() const { return static_cast<int>(lambdas_.size()); }
  int fine_steps() const { return M_fine_; }
  double fine_dt() const { return T_ / M_fine_; }

  // dW has n entries, dN has marks() entries.
  void increments(std::uint64_t particle, int step, int refine, double* dW, int* dN) const;

 private:
  std::uint64_t seed_ = 0;
  int n_ = 0;
  std::vector<double> lambdas_;
  double T_ = 1.0;
  int M_fine_ = 1;
};

}  // namespace wmfc
