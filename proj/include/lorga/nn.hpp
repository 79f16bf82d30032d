#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lorga/lora.hpp"
#include "lorga/matrix.hpp"

namespace lorga::nn {

enum class Activation { Identity, Relu, Tanh };
enum class Loss { Mse, SoftmaxCrossEntropy };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);
std::string loss_name(Loss l);
Loss loss_from_name(const std::string& name);

struct NetworkSpec {
  // layer_dims[0] is the input dimension; each consecutive pair is one
  // linear layer, so L = layer_dims.size() - 1.
  std::vector<Index> layer_dims;
  Activation activation = Activation::Tanh;  // between layers, not after the last
  Loss loss = Loss::Mse;
  std::uint64_t init_seed = 0;
  bool use_bias = false;
};

struct NetLayer {
  Matrix w;      // base weight; becomes the frozen weight once an adapter is attached
  Vector bias;   // empty when the network has no biases
  std::optional<lora::LoraAdapter> adapter;
  std::optional<lora::LoraAdapter> adapter_init;  // snapshot taken at attach time

  Index d_out() const { return w.rows(); }
  Index d_in() const { return w.cols(); }
  Matrix effective_weight() const {
    if (!adapter) return w;
    return w + adapter->eta * adapter->b * adapter->a;
  }
};

struct ForwardTrace {
  std::vector<Matrix> inputs;  // x_l, the input to layer l (batch columns)
  std::vector<Matrix> pre;     // z_l = W_l x_l (+ bias), before activation
  Matrix prediction;           // z_L of the last layer
  Matrix targets;
  double loss = 0.0;
};

struct GradientSnapshot {
  std::vector<Matrix> dw;      // dL/dW_l (dL/dW'_l for adapted layers)
  std::vector<Vector> dbias;   // empty vectors when biases are absent
  // Factor gradients (da, db) for adapted layers, otherwise unset.
  std::vector<std::optional<std::pair<Matrix, Matrix>>> dab;
};

// Counts simultaneously materialized per-layer gradient matrices.
struct GradProbe {
  int live = 0;
  int peak = 0;
  void acquire() {
    ++live;
    if (live > peak) peak = live;
  }
  void release() { --live; }
};

class Network {
 public:
  // Base weights drawn from U(-sqrt(3/d_in), sqrt(3/d_in)), seeded.
  static Network create(const NetworkSpec& spec);

  const NetworkSpec& spec() const { return spec_; }
  Index layer_count() const { return static_cast<Index>(layers_.size()); }
  std::vector<NetLayer>& layers() { return layers_; }
  const std::vector<NetLayer>& layers() const { return layers_; }

  ForwardTrace forward(const Matrix& x, const Matrix& targets) const;
  Matrix predict(const Matrix& x) const;

  // Replaces layer l's weight with the frozen weight and installs the
  // adapter; the initial adapter is retained for checkpointing.
  void attach_adapter(Index layer, const lora::AdaptedLayer& adapted);

 private:
  NetworkSpec spec_;
  std::vector<NetLayer> layers_;
};

// Loss value for a prediction/target pair under the mean-over-batch
// convention (columns are samples).
double loss_value(Loss loss, const Matrix& prediction, const Matrix& targets);

GradientSnapshot backward(const Network& net, const ForwardTrace& trace);

// Reverse-order sweep materializing at most one layer gradient at a time.
// visit receives (layer_index, dW_l); gradients equal backward()'s output
// bit for bit. probe, when given, records the live/peak gradient counts.
void backward_streaming(const Network& net, const ForwardTrace& trace,
                        const std::function<void(Index, const Matrix&)>& visit,
                        GradProbe* probe = nullptr);

// Directory checkpoint: one LGA1 file per matrix plus manifest.json.
void save_network(const Network& net, const std::string& dir);
Network load_network(const std::string& dir);

}  // namespace lorga::nn
