#include "lorga/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace lorga::linalg {

SvdFactors svd(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0)
    throw std::invalid_argument("svd: empty matrix");
  require_finite(m, "svd input");

  Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success)
    throw std::runtime_error("svd: decomposition did not converge");

  SvdFactors f{dec.matrixU(), dec.singularValues(), dec.matrixV()};

  for (Index j = 0; j < f.u.cols(); ++j) {
    Index imax = 0;
    f.u.col(j).cwiseAbs().maxCoeff(&imax);
    if (f.u(imax, j) < 0.0) {
      f.u.col(j) = -f.u.col(j);
      f.v.col(j) = -f.v.col(j);
    }
  }
  return f;
}

double frobenius_norm(const Matrix& m) {
  require_finite(m, "frobenius_norm input");
  return m.norm();
}

Matrix best_rank_k(const Matrix& m, Index k) {
  if (k < 1 || k > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("best_rank_k: k out of range");
  SvdFactors f = svd(m);
  return f.u.leftCols(k) * f.s.head(k).asDiagonal() * f.v.leftCols(k).transpose();
}

Matrix random_gaussian(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Matrix random_uniform(Index rows, Index cols, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Matrix random_orthonormal_columns(Index dim, Index count, std::uint64_t seed) {
  if (count < 1 || dim < 1) throw std::invalid_argument("random_orthonormal_columns: empty");
  if (count > dim)
    throw std::invalid_argument("random_orthonormal_columns: count exceeds dim");
  auto rng = make_rng(seed);
  Matrix g = random_gaussian(dim, count, 1.0, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, count);
  // Fix the sign of each column by the sign of R's diagonal so the result
  // is Haar-distributed and reproducible.
  Matrix r = qr.matrixQR().topRows(count).triangularView<Eigen::Upper>();
  for (Index j = 0; j < count; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace lorga::linalg
