#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lorga/matrix.hpp"
#include "lorga/nn.hpp"

namespace lorga::train {

enum class OptimizerKind { Sgd, AdamW };
enum class Schedule { Constant, CosineWithWarmup };
enum class Trainable { AdaptersOnly, Full };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double learning_rate = 1e-3;
  double warmup_ratio = 0.03;
  Schedule schedule = Schedule::CosineWithWarmup;
  Index steps = 100;
  Index batch_size = 32;
  std::uint64_t seed = 0;
  Trainable trainable = Trainable::AdaptersOnly;
  // Loss threshold tau for steps_to_threshold; disabled when <= 0.
  double threshold = 0.0;
};

struct StepRecord {
  Index step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct MetricsLog {
  std::vector<StepRecord> records;
  // First step at which the 10-step moving average of the loss drops
  // below the configured threshold.
  std::optional<Index> steps_to_threshold;
  double final_loss = 0.0;
  bool diverged = false;
  Index divergence_step = -1;
  int smoothing_window = 10;
};

// p <- p - lr * g
void sgd_step(Matrix& param, const Matrix& grad, double lr);

// Per-tensor decoupled-weight-decay adaptive moment update with bias
// correction. `step` is 1-based.
struct AdamWState {
  Matrix m;
  Matrix v;
};

void adamw_step(AdamWState& state, Matrix& param, const Matrix& grad, double lr,
                Index step, const TrainConfig& cfg);

// Learning rate at `step` in [0, steps): linear warmup over
// ceil(warmup_ratio*steps) steps, then cosine decay to 0.
double lr_at(const TrainConfig& cfg, Index step);

MetricsLog run_training(nn::Network& net, const Matrix& inputs, const Matrix& targets,
                        const TrainConfig& cfg);

}  // namespace lorga::train
