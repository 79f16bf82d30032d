#pragma once

#include <cstdint>
#include <random>

#include "lorga/matrix.hpp"

namespace lorga::linalg {

// Thin SVD, m = u * s.asDiagonal() * v^T with k = min(rows, cols).
// Columns of u and v are orthonormal; s is non-increasing and non-negative.
// Sign convention: in each column of u the entry of largest magnitude is
// non-negative (the matching column of v is negated in tandem), so the
// factorization is deterministic.
struct SvdFactors {
  Matrix u;
  Vector s;
  Matrix v;
};

SvdFactors svd(const Matrix& m);

double frobenius_norm(const Matrix& m);

// Best rank-k approximation sum_{i<=k} sigma_i u_i v_i^T.
Matrix best_rank_k(const Matrix& m, Index k);

// dim x count matrix with orthonormal columns, Haar-distributed, seeded.
Matrix random_orthonormal_columns(Index dim, Index count, std::uint64_t seed);

// Shared RNG construction so every module derives streams the same way.
inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

Matrix random_gaussian(Index rows, Index cols, double stddev, std::mt19937_64& rng);
Matrix random_uniform(Index rows, Index cols, double lo, double hi, std::mt19937_64& rng);

}  // namespace lorga::linalg
