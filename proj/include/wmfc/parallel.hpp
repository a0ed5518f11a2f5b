#pragma once

#include <cstddef>
#include <functional>

namespace wmfc {

void set_threads(int n);
int threads();

// Splits [0,n) into contiguous chunks, one per worker. Each index is touched by
// exactly one call, so per-index writes never race; results depend only on the
// body, never on the partition.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// Pairwise sum with a fixed tree shape (leaf width 64), independent of threads.
double ordered_sum(const double* v, std::size_t n);
// strided variant: sums v[i*stride] for i < n
double ordered_sum(const double* v, std::size_t n, std::size_t stride);

struct MeanStd {
  double mean = 0.0;
  double se = 0.0;
};
// Sample mean and standard error of the mean (ordered reductions).
MeanStd mean_stderr(const double* v, std::size_t n);

}  // namespace wmfc
