#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "lorga/linalg.hpp"
#include "lorga/matrix.hpp"

using namespace lorga;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lorga_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("lga1 roundtrip is bit exact") {
  TempDir tmp;
  auto rng = linalg::make_rng(5);
  Matrix m = linalg::random_gaussian(7, 11, 1.0, rng);
  m(0, 0) = 1e-300;
  m(6, 10) = -1e300;
  io::save_lga1(m, tmp.file("m.lga1"));
  Matrix r = io::load_lga1(tmp.file("m.lga1"));
  REQUIRE(r.rows() == 7);
  REQUIRE(r.cols() == 11);
  CHECK((r - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lga1 header layout is the documented byte sequence") {
  TempDir tmp;
  Matrix m(1, 2);
  m << 1.0, 2.0;
  io::save_lga1(m, tmp.file("h.lga1"));
  std::ifstream is(tmp.file("h.lga1"), std::ios::binary);
  char buf[20];
  is.read(buf, 20);
  REQUIRE(is.good());
  CHECK(std::string(buf, 4) == "LGA1");
  // rows = 1, cols = 2 as little-endian u64.
  CHECK(buf[4] == 1);
  for (int i = 5; i < 12; ++i) CHECK(buf[i] == 0);
  CHECK(buf[12] == 2);
  for (int i = 13; i < 20; ++i) CHECK(buf[i] == 0);
}

TEST_CASE("lga1 rejects bad files") {
  TempDir tmp;
  CHECK_THROWS_AS(io::load_lga1(tmp.file("missing.lga1")), std::runtime_error);
  {
    std::ofstream os(tmp.file("bad.lga1"), std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS(io::load_lga1(tmp.file("bad.lga1")), std::runtime_error);
  {
    Matrix m = Matrix::Ones(4, 4);
    io::save_lga1(m, tmp.file("trunc.lga1"));
    fs::resize_file(tmp.file("trunc.lga1"), 40);
  }
  CHECK_THROWS_AS(io::load_lga1(tmp.file("trunc.lga1")), std::runtime_error);
}

TEST_CASE("csv roundtrip preserves doubles exactly") {
  TempDir tmp;
  auto rng = linalg::make_rng(6);
  Matrix m = linalg::random_gaussian(5, 3, 1.0, rng);
  io::save_csv(m, tmp.file("m.csv"));
  Matrix r = io::load_csv(tmp.file("m.csv"));
  REQUIRE(r.rows() == 5);
  REQUIRE(r.cols() == 3);
  // max_digits10 output round-trips IEEE doubles exactly.
  CHECK((r - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv errors name the offending line") {
  TempDir tmp;
  {
    std::ofstream os(tmp.file("bad.csv"));
    os << "2,2\n1.0,2.0\n3.0,oops\n";
  }
  CHECK_THROWS_WITH_AS(io::load_csv(tmp.file("bad.csv")),
                       doctest::Contains("line 3"), std::runtime_error);
  {
    std::ofstream os(tmp.file("short.csv"));
    os << "3,2\n1.0,2.0\n";
  }
  CHECK_THROWS_WITH_AS(io::load_csv(tmp.file("short.csv")),
                       doctest::Contains("line 3"), std::runtime_error);
  {
    std::ofstream os(tmp.file("hdr.csv"));
    os << "x,y\n";
  }
  CHECK_THROWS_AS(io::load_csv(tmp.file("hdr.csv")), std::runtime_error);
}

TEST_CASE("require_finite names the first bad entry") {
  Matrix m = Matrix::Zero(2, 3);
  m(1, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(require_finite(m, "probe"), doctest::Contains("(1,2)"),
                       std::invalid_argument);
  CHECK_NOTHROW(require_finite(Matrix::Zero(2, 2), "ok"));
}
