#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lorga/matrix.hpp"

namespace lorga::data {

enum class DatasetKind { TeacherStudent, Blobs, Csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::TeacherStudent;
  // teacher_student: dims of the hidden teacher network (at least 2 layers).
  std::vector<Index> teacher_dims = {64, 64, 64};
  double noise_sigma = 0.0;
  // blobs
  Index classes = 3;
  Index dim = 8;
  double spread = 0.5;
  // csv: one sample per row, features plus a target column (by name).
  std::string path;
  std::string target_column;

  Index n_samples = 256;
  std::uint64_t seed = 0;
};

struct Dataset {
  Matrix inputs;   // d x n, samples are columns
  Matrix targets;  // t x n
};

Dataset generate(const DatasetSpec& spec);

// Seeded shuffle into disjoint, exhaustive parts; fractions must sum to 1.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  double eval_fraction, std::uint64_t seed);

}  // namespace lorga::data
