#include "wmfc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wmfc {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32Ctr round(const Philox4x32Ctr& c, const Philox4x32Key& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kM0, c[0], hi0, lo0);
  mulhilo(kM1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32Ctr philox4x32_10(Philox4x32Ctr ctr, Philox4x32Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    ctr = round(ctr, key);
  }
  return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t particle, std::uint32_t step, Stream stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{static_cast<std::uint32_t>(particle), static_cast<std::uint32_t>(particle >> 32), step,
           static_cast<std::uint32_t>(stream) << 24} {}

void CounterRng::refill() {
  buf_ = philox4x32_10(ctr_, key_);
  ++ctr_[3];
  if ((ctr_[3] & 0x00FFFFFFu) == 0) throw std::runtime_error("CounterRng: block counter exhausted");
  pos_ = 0;
}

std::uint32_t CounterRng::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

double CounterRng::uniform() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  const std::uint64_t bits = ((hi << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

int CounterRng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  int k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / k;
    cdf += p;
    if (k > 10000 || p == 0.0) break;  // tail beyond double resolution
  }
  return k;
}

NoiseSource::NoiseSource(std::uint64_t seed, int n, std::vector<double> lambdas, double T, int M_fine)
    : seed_(seed), n_(n), lambdas_(std::move(lambdas)), T_(T), M_fine_(M_fine) {
  if (M_fine < 1 || T <= 0.0) throw std::invalid_argument("NoiseSource: bad grid");
}

void NoiseSource::increments(std::uint64_t particle, int step, int refine, double* dW, int* dN) const {
  const int K = marks();
  for (int j = 0; j < n_; ++j) dW[j] = 0.0;
  for (int k = 0; k < K; ++k) dN[k] = 0;
  const double sq = std::sqrt(fine_dt());
  const double h = fine_dt();
  for (int s = 0; s < refine; ++s) {
    const int fine = step * refine + s;
    if (fine >= M_fine_) throw std::out_of_range("NoiseSource: step outside fine grid");
    CounterRng rng(seed_, particle, static_cast<std::uint32_t>(fine));
    for (int j = 0; j < n_; ++j) dW[j] += sq * rng.normal();
    for (int k = 0; k < K; ++k) dN[k] += rng.poisson(lambdas_[k] * h);
  }
}

}  // namespace wmfc
