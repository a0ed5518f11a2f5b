#include <doctest.h>

#include <cmath>
#include <vector>

#include "wmfc/parallel.hpp"
#include "wmfc/rng.hpp"

using namespace wmfc;

TEST_CASE("philox known answers") {
  // reference vectors published with the Random123 distribution
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Philox4x32Ctr{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Philox4x32Ctr{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Philox4x32Ctr{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter rng replays and separates streams") {
  CounterRng a(42, 7, 3), b(42, 7, 3), c(42, 8, 3), d(42, 7, 3, Stream::Probes);
  bool diff_particle = false, diff_stream = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u32();
    CHECK(x == b.next_u32());
    diff_particle |= x != c.next_u32();
    diff_stream |= x != d.next_u32();
  }
  CHECK(diff_particle);
  CHECK(diff_stream);
}

TEST_CASE("uniform, normal and poisson moments") {
  const int n = 200000;
  std::vector<double> u(n), z(n), z2(n), k(n);
  CounterRng r(1, 0, 0);
  for (int i = 0; i < n; ++i) {
    u[i] = r.uniform();
    CHECK_MESSAGE((u[i] > 0.0 && u[i] < 1.0), "uniform left the open interval");
  }
  for (int i = 0; i < n; ++i) {
    z[i] = r.normal();
    z2[i] = z[i] * z[i];
  }
  for (int i = 0; i < n; ++i) k[i] = r.poisson(0.3);
  const auto mu = mean_stderr(u.data(), n), mz = mean_stderr(z.data(), n), mz2 = mean_stderr(z2.data(), n),
             mk = mean_stderr(k.data(), n);
  CHECK(std::abs(mu.mean - 0.5) < 4 * mu.se);
  CHECK(std::abs(mz.mean) < 4 * mz.se);
  CHECK(std::abs(mz2.mean - 1.0) < 4 * mz2.se);
  CHECK(std::abs(mk.mean - 0.3) < 4 * mk.se);
}

TEST_CASE("coarse noise is the sum of fine noise") {
  const NoiseSource ns(9, 2, {1.0, 0.5}, 1.0, 16);
  for (std::uint64_t p : {0ULL, 5ULL, 1000ULL}) {
    for (int step = 0; step < 4; ++step) {
      double dW[2], sW[2] = {0, 0};
      int dN[2], sN[2] = {0, 0};
      ns.increments(p, step, 4, dW, dN);
      for (int f = 0; f < 4; ++f) {
        double w[2];
        int c[2];
        ns.increments(p, step * 4 + f, 1, w, c);
        for (int j = 0; j < 2; ++j) {
          sW[j] += w[j];
          sN[j] += c[j];
        }
      }
      for (int j = 0; j < 2; ++j) {
        CHECK(dW[j] == doctest::Approx(sW[j]).epsilon(1e-14));
        CHECK(dN[j] == sN[j]);
      }
    }
  }
}

TEST_CASE("ordered sums do not depend on the thread count") {
  std::vector<double> v(100003);
  CounterRng r(3, 0, 0);
  for (auto& x : v) x = r.normal() * 1e8 + r.uniform();
  set_threads(1);
  const double s1 = ordered_sum(v.data(), v.size());
  const auto m1 = mean_stderr(v.data(), v.size());
  set_threads(4);
  const double s4 = ordered_sum(v.data(), v.size());
  const auto m4 = mean_stderr(v.data(), v.size());
  set_threads(1);
  CHECK(s1 == s4);
  CHECK(m1.mean == m4.mean);
  CHECK(m1.se == m4.se);
}
