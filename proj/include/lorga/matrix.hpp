#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lorga {

// All numerics are dense double precision. Samples are columns of a batch
// matrix, so a linear layer acts as y = W x with W of shape d_out x d_in.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool is_finite(const Matrix& m) { return m.allFinite(); }

// Throws std::invalid_argument naming the first offending entry.
void require_finite(const Matrix& m, const std::string& what);

namespace io {

// "LGA1" binary format: 4-byte magic, u64-le rows, u64-le cols, then
// rows*cols f64-le values in row-major order.
void save_lga1(const Matrix& m, const std::string& path);
Matrix load_lga1(const std::string& path);

// CSV: first line "rows,cols", then one matrix row per line.
void save_csv(const Matrix& m, const std::string& path);
Matrix load_csv(const std::string& path);

}  // namespace io

}  // namespace lorga
