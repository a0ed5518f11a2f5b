#include "wmfc/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wmfc/parallel.hpp"

namespace wmfc {

namespace {

constexpr std::size_t kBlock = 512;

// sum over rows of w(i) * X_i X_i^T, accumulated per block then combined in block order
Eigen::MatrixXd gram(const double* X, std::size_t N, int nb) {
  const std::size_t nblk = (N + kBlock - 1) / kBlock;
  std::vector<Eigen::MatrixXd> part(nblk, Eigen::MatrixXd::Zero(nb, nb));
  parallel_for(nblk, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      Eigen::MatrixXd& G = part[b];
      const std::size_t e = std::min(N, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < e; ++i) {
        const double* r = X + i * nb;
        for (int c = 0; c < nb; ++c)
          for (int d = c; d < nb; ++d) G(c, d) += r[c] * r[d];
      }
    }
  });
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nb, nb);
  for (auto& p : part) G += p;
  for (int c = 0; c < nb; ++c)
    for (int d = 0; d < c; ++d) G(c, d) = G(d, c);
  return G;
}

Eigen::VectorXd xty(const double* X, std::size_t N, int nb, const double* y, std::size_t stride) {
  const std::size_t nblk = (N + kBlock - 1) / kBlock;
  std::vector<Eigen::VectorXd> part(nblk, Eigen::VectorXd::Zero(nb));
  parallel_for(nblk, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t e = std::min(N, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < e; ++i) {
        const double* r = X + i * nb;
        const double yi = y[i * stride];
        for (int c = 0; c < nb; ++c) part[b](c) += r[c] * yi;
      }
    }
  });
  Eigen::VectorXd v = Eigen::VectorXd::Zero(nb);
  for (auto& p : part) v += p;
  return v;
}

}  // namespace

LeastSquares::LeastSquares(const double* X, std::size_t N, int nb, double ridge, double drop_tol)
    : X_(X), N_(N), nb_(nb), ridge_(ridge), scale_(nb, 1.0) {
  if (N == 0 || nb <= 0) throw std::invalid_argument("LeastSquares: empty design");
  Eigen::MatrixXd G = gram(X, N, nb) / static_cast<double>(N);
  for (int c = 0; c < nb; ++c) scale_[c] = G(c, c) > 0.0 ? std::sqrt(G(c, c)) : 0.0;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nb, nb);
  for (int c = 0; c < nb; ++c)
    for (int d = 0; d < nb; ++d)
      if (scale_[c] > 0.0 && scale_[d] > 0.0) S(c, d) = G(c, d) / (scale_[c] * scale_[d]);

  // pivoted Cholesky: greedy selection of the largest residual diagonal
  std::vector<int> remaining;
  for (int c = 0; c < nb; ++c) {
    if (scale_[c] > 0.0)
      remaining.push_back(c);
    else
      dropped_.push_back(c);
  }
  Eigen::MatrixXd R = S;
  while (!remaining.empty()) {
    int best = -1;
    double bv = -1.0;
    for (int c : remaining)
      if (R(c, c) > bv) {
        bv = R(c, c);
        best = c;
      }
    if (bv <= drop_tol) break;
    active_.push_back(best);
    remaining.erase(std::find(remaining.begin(), remaining.end(), best));
    const double piv = std::sqrt(bv);
    Eigen::VectorXd l = R.col(best) / piv;
    for (int c : remaining)
      for (int d : remaining) R(c, d) -= l(c) * l(d);
    R.row(best).setZero();
    R.col(best).setZero();
  }
  for (int c : remaining) dropped_.push_back(c);
  std::sort(active_.begin(), active_.end());
  std::sort(dropped_.begin(), dropped_.end());
  if (active_.empty()) throw std::runtime_error("LeastSquares: design has rank 0");

  const int r = rank();
  Eigen::MatrixXd Sr(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) Sr(a, b) = S(active_[a], active_[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sr, Eigen::EigenvaluesOnly);
  const double lo = std::max(es.eigenvalues().minCoeff(), 0.0) + ridge_;
  cond_ = (es.eigenvalues().maxCoeff() + ridge_) / lo;
  Sr.diagonal().array() += ridge_;
  Eigen::LLT<Eigen::MatrixXd> llt(Sr);
  if (llt.info() != Eigen::Success) throw std::runtime_error("LeastSquares: factorization failed");
  Eigen::MatrixXd L = llt.matrixL();
  chol_.assign(L.data(), L.data() + r * r);  // column-major storage of L
}

std::vector<double> LeastSquares::fit(const double* y, std::size_t stride) const {
  const int r = rank();
  Eigen::VectorXd v = xty(X_, N_, nb_, y, stride) / static_cast<double>(N_);
  Eigen::VectorXd b(r);
  for (int a = 0; a < r; ++a) b(a) = v(active_[a]) / scale_[active_[a]];
  Eigen::Map<const Eigen::MatrixXd> L(chol_.data(), r, r);
  Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(b);
  Eigen::VectorXd c = L.transpose().triangularView<Eigen::Upper>().solve(z);
  std::vector<double> coef(nb_, 0.0);
  for (int a = 0; a < r; ++a) coef[active_[a]] = c(a) / scale_[active_[a]];
  return coef;
}

void LeastSquares::predict(const std::vector<double>& coef, double* out) const {
  parallel_for(N_, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double* row = X_ + i * nb_;
      double s = 0.0;
      for (int c = 0; c < nb_; ++c) s += coef[c] * row[c];
      out[i] = s;
    }
  });
}

}  // namespace wmfc
