#pragma once

#include <cstddef>
#include <vector>

namespace wmfc {

// Ridge least squares on a fixed design X (N rows, nb columns, row-major).
// Columns are scaled to unit second moment; columns that are numerically
// dependent on earlier pivots are dropped (pivoted Cholesky on the scaled Gram)
// and get a zero coefficient. All reductions use a fixed block shape.
class LeastSquares {
 public:
  LeastSquares(const double* X, std::size_t N, int nb, double ridge = 1e-10, double drop_tol = 1e-10);

  int columns() const { return nb_; }
  int rank() const { return static_cast<int>(active_.size()); }
  const std::vector<int>& active() const { return active_; }
  const std::vector<int>& dropped() const { return dropped_; }
  double cond() const { return cond_; }

  // y[i*stride] for i < N
  std::vector<double> fit(const double* y, std::size_t stride = 1) const;
  void predict(const std::vector<double>& coef, double* out) const;

 private:
  const double* X_;
  std::size_t N_;
  int nb_;
  double ridge_;
  std::vector<double> scale_;
  std::vector<int> active_, dropped_;
  std::vector<double> chol_;  // reduced factor, row-major rank x rank
  double cond_ = 1.0;
};

}  // namespace wmfc
