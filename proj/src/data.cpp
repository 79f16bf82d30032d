#include "lorga/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lorga/linalg.hpp"
#include "lorga/nn.hpp"

namespace lorga::data {

namespace {

Dataset generate_teacher_student(const DatasetSpec& spec) {
  if (spec.teacher_dims.size() < 3)
    throw std::invalid_argument("teacher_student: teacher needs at least 2 layers");
  nn::NetworkSpec tspec;
  tspec.layer_dims = spec.teacher_dims;
  tspec.activation = nn::Activation::Tanh;
  tspec.loss = nn::Loss::Mse;
  tspec.init_seed = spec.seed ^ 0x7ec5a11ull;  // decorrelate teacher weights from inputs
  nn::Network teacher = nn::Network::create(tspec);

  auto rng = linalg::make_rng(spec.seed);
  Dataset ds;
  ds.inputs = linalg::random_gaussian(spec.teacher_dims.front(), spec.n_samples, 1.0, rng);
  ds.targets = teacher.predict(ds.inputs);
  if (spec.noise_sigma > 0.0)
    ds.targets += linalg::random_gaussian(ds.targets.rows(), ds.targets.cols(),
                                          spec.noise_sigma, rng);
  return ds;
}

Dataset generate_blobs(const DatasetSpec& spec) {
  if (spec.classes < 2) throw std::invalid_argument("blobs: need at least 2 classes");
  auto rng = linalg::make_rng(spec.seed);
  Matrix centers = linalg::random_gaussian(spec.dim, spec.classes, 2.0, rng);
  Dataset ds;
  ds.inputs = Matrix(spec.dim, spec.n_samples);
  ds.targets = Matrix::Zero(spec.classes, spec.n_samples);
  std::uniform_int_distribution<Index> pick(0, spec.classes - 1);
  for (Index j = 0; j < spec.n_samples; ++j) {
    Index c = pick(rng);
    ds.inputs.col(j) =
        centers.col(c) + linalg::random_gaussian(spec.dim, 1, spec.spread, rng).col(0);
    ds.targets(c, j) = 1.0;
  }
  return ds;
}

Dataset generate_csv(const DatasetSpec& spec) {
  std::ifstream is(spec.path);
  if (!is) throw std::runtime_error("csv dataset: cannot open " + spec.path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv dataset: empty file");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  Index target_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == spec.target_column) target_idx = static_cast<Index>(i);
  if (target_idx < 0)
    throw std::runtime_error("csv dataset: target column '" + spec.target_column +
                             "' not found");
  std::vector<std::vector<double>> rows;
  Index lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream rs(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(rs, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("csv dataset: malformed value at line " +
                                 std::to_string(lineno));
      }
    }
    if (row.size() != header.size())
      throw std::runtime_error("csv dataset: wrong column count at line " +
                               std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("csv dataset: no samples");
  const auto n = static_cast<Index>(rows.size());
  const auto d = static_cast<Index>(header.size()) - 1;
  Dataset ds;
  ds.inputs = Matrix(d, n);
  ds.targets = Matrix(1, n);
  for (Index j = 0; j < n; ++j) {
    Index k = 0;
    for (Index i = 0; i < static_cast<Index>(header.size()); ++i) {
      if (i == target_idx)
        ds.targets(0, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      else
        ds.inputs(k++, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
  }
  return ds;
}

}  // namespace

Dataset generate(const DatasetSpec& spec) {
  if (spec.n_samples < 1 && spec.kind != DatasetKind::Csv)
    throw std::invalid_argument("generate: n_samples must be >= 1");
  if (spec.noise_sigma < 0.0)
    throw std::invalid_argument("generate: noise_sigma must be >= 0");
  switch (spec.kind) {
    case DatasetKind::TeacherStudent: return generate_teacher_student(spec);
    case DatasetKind::Blobs: return generate_blobs(spec);
    case DatasetKind::Csv: return generate_csv(spec);
  }
  throw std::logic_error("generate: bad kind");
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  double eval_fraction, std::uint64_t seed) {
  if (std::abs(train_fraction + eval_fraction - 1.0) > 1e-12)
    throw std::invalid_argument("split: fractions must sum to 1");
  const Index n = dataset.inputs.cols();
  const auto n_train = static_cast<Index>(std::llround(train_fraction * double(n)));
  if (n_train < 1 || n_train >= n) throw std::invalid_argument("split: empty part");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = linalg::make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto take = [&](Index from, Index count) {
    Dataset part;
    part.inputs = Matrix(dataset.inputs.rows(), count);
    part.targets = Matrix(dataset.targets.rows(), count);
    for (Index j = 0; j < count; ++j) {
      part.inputs.col(j) = dataset.inputs.col(order[static_cast<std::size_t>(from + j)]);
      part.targets.col(j) = dataset.targets.col(order[static_cast<std::size_t>(from + j)]);
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n - n_train)};
}

}  // namespace lorga::data
