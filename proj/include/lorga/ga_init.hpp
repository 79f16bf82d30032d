#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lorga/lora.hpp"
#include "lorga/nn.hpp"

namespace lorga::ga_init {

struct GaInitConfig {
  Index rank = 8;
  double alpha = 16.0;
  double gamma = 16.0;
  Index sampled_batch_size = 8;
  Index micro_batch_size = 8;  // must divide sampled_batch_size
  std::uint64_t seed = 0;
  std::optional<lora::IndexPartition> partition;
  std::vector<Index> exclude_layers;
};

// Per-layer gradient of the mean loss on the sampled batch. Computed with
// the streaming sweep; probe, when given, observes the sweep's live count.
nn::GradientSnapshot estimate_gradients(const nn::Network& net, const Matrix& inputs,
                                        const Matrix& targets,
                                        nn::GradProbe* probe = nullptr);

// Micro-batch accumulation, each micro gradient weighted by b/n. Equals
// the full-batch estimate within 1e-12 per entry; delegates to the
// full-batch path when b == n.
nn::GradientSnapshot estimate_gradients_accumulated(const nn::Network& net,
                                                    const Matrix& inputs,
                                                    const Matrix& targets,
                                                    Index micro_batch_size,
                                                    nn::GradProbe* probe = nullptr);

struct LayerInitReport {
  Index layer = 0;
  Index d_in = 0;
  Index d_out = 0;
  Index rank = 0;
  double eta = 0.0;
  double gamma = 0.0;
  double zeta = 0.0;
  std::vector<double> singular_values;  // first min(4r, k)
  double coverage_2r = 0.0;
  double criterion_residual = 0.0;
  double predicted_residual = 0.0;  // zeta * sqrt(tail energy past 2r)
};

struct InitReport {
  std::uint64_t seed = 0;
  Index sampled_batch_size = 0;
  Index micro_batch_size = 0;
  std::vector<LayerInitReport> layers;
};

// Estimates gradients on the sampled batch, builds the gradient-based
// adapters layer by layer, and adjusts the frozen weights so the network
// output is unchanged. When micro_batch_size == sampled_batch_size the
// sweep builds each adapter as its gradient appears, so at most one layer
// gradient is materialized at a time.
InitReport lora_ga_initialize(nn::Network& net, const GaInitConfig& config,
                              const Matrix& inputs, const Matrix& targets,
                              nn::GradProbe* probe = nullptr);

}  // namespace lorga::ga_init
