#include "lorga/matrix.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace lorga {

void require_finite(const Matrix& m, const std::string& what) {
  if (m.allFinite()) return;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j)))
        throw std::invalid_argument(what + ": non-finite entry at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
}

namespace io {

namespace {

constexpr char kMagic[4] = {'L', 'G', 'A', '1'};

void put_u64le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

}  // namespace

void save_lga1(const Matrix& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kMagic, 4);
  put_u64le(os, static_cast<std::uint64_t>(m.rows()));
  put_u64le(os, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      put_u64le(os, bits);
    }
  if (!os) throw std::runtime_error("write failed: " + path);
}

Matrix load_lga1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad LGA1 magic in " + path);
  auto rows = static_cast<Index>(get_u64le(is));
  auto cols = static_cast<Index>(get_u64le(is));
  if (!is || rows <= 0 || cols <= 0)
    throw std::runtime_error("bad LGA1 header in " + path);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      std::uint64_t bits = get_u64le(is);
      double v;
      std::memcpy(&v, &bits, 8);
      m(i, j) = v;
    }
  if (!is) throw std::runtime_error("truncated LGA1 file: " + path);
  return m;
}

void save_csv(const Matrix& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << m.rows() << "," << m.cols() << "\n";
  os.precision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ",";
      os << m(i, j);
    }
    os << "\n";
  }
}

Matrix load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty CSV: " + path);
  std::istringstream head(line);
  Index rows = 0, cols = 0;
  char comma = 0;
  if (!(head >> rows >> comma >> cols) || comma != ',' || rows <= 0 || cols <= 0)
    throw std::runtime_error("bad CSV header in " + path);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(is, line))
      throw std::runtime_error(path + ": truncated at line " + std::to_string(i + 2));
    std::istringstream row(line);
    std::string cell;
    for (Index j = 0; j < cols; ++j) {
      if (!std::getline(row, cell, ','))
        throw std::runtime_error(path + ": malformed row at line " + std::to_string(i + 2));
      try {
        m(i, j) = std::stod(cell);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": bad value at line " + std::to_string(i + 2));
      }
    }
  }
  return m;
}

}  // namespace io
}  // namespace lorga
