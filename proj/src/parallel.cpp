#include "wmfc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace wmfc {

namespace {
int g_threads = 1;
}

void set_threads(int n) { g_threads = std::max(1, n); }
int threads() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t T = std::min<std::size_t>(static_cast<std::size_t>(g_threads), n);
  if (T <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(T);
  const std::size_t chunk = (n + T - 1) / T;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, t, b, e] {
      try {
        body(b, e);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  // lowest chunk wins so the reported error does not depend on scheduling
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

namespace {
double pairwise(const double* v, std::size_t n, std::size_t stride) {
  if (n <= 64) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i * stride];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(v, h, stride) + pairwise(v + h * stride, n - h, stride);
}
}  // namespace

double ordered_sum(const double* v, std::size_t n) { return pairwise(v, n, 1); }
double ordered_sum(const double* v, std::size_t n, std::size_t stride) { return pairwise(v, n, stride); }

MeanStd mean_stderr(const double* v, std::size_t n) {
  MeanStd r;
  if (n == 0) return r;
  r.mean = ordered_sum(v, n) / static_cast<double>(n);
  if (n < 2) return r;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - r.mean) * (v[i] - r.mean);
  const double var = ordered_sum(sq.data(), n) / static_cast<double>(n - 1);
  r.se = std::sqrt(var / static_cast<double>(n));
  return r;
}

}  // namespace wmfc
