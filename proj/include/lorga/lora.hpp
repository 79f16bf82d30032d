#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lorga/matrix.hpp"

namespace lorga::lora {

// The five ablation initialization schemes. "so" = stable output scaling,
// "ga" = gradient approximation (factors from the SVD of the estimated
// full-fine-tune gradient).
enum class SchemeKind { Vanilla, Gaussian, GaussianSo, GradApprox, LoraGa };

std::string scheme_name(SchemeKind kind);
SchemeKind scheme_from_name(const std::string& name);

struct InitScheme {
  SchemeKind kind = SchemeKind::Vanilla;
  double alpha = 16.0;
  Index rank = 8;
  // Required for GaussianSo and LoraGa.
  std::optional<double> gamma;
  std::uint64_t seed = 0;
};

// Which singular vectors feed A (columns of V) and B (columns of U).
// The optimality result holds for any partition of {0..2r-1}; the default is
// {0..r-1} for A and {r..2r-1} for B.
struct IndexPartition {
  std::vector<Index> for_a;
  std::vector<Index> for_b;

  static IndexPartition standard(Index rank);
};

struct ScalingConstants {
  double eta = 0.0;
  // Populated only for LoraGa: zeta = (alpha^2/gamma^2) * sqrt(d_out / r^2).
  std::optional<double> zeta;
  // Per-entry multiplier applied to the raw factors:
  // d_out^{1/4}/sqrt(gamma) for GaussianSo, d_out^{1/4}/gamma for LoraGa,
  // 1 otherwise.
  double factor = 1.0;
};

ScalingConstants compute_scaling(SchemeKind kind, double alpha, Index rank,
                                 std::optional<double> gamma, Index d_out);

struct LoraAdapter {
  Matrix a;  // r x d_in
  Matrix b;  // d_out x r
  Index rank = 0;
  double alpha = 0.0;
  double eta = 0.0;
};

// Frozen base weight plus adapter; effective weight = w_frozen + eta*b*a.
struct AdaptedLayer {
  Matrix w_frozen;
  LoraAdapter adapter;

  Matrix effective_weight() const {
    return w_frozen + adapter.eta * adapter.b * adapter.a;
  }
};

// Builds the adapter for one weight matrix. `grad` is the estimated
// full-fine-tune gradient; required for the gradient-based schemes,
// ignored otherwise. The frozen weight is adjusted by -eta*B*A whenever
// the adapter product is nonzero, so the effective weight equals w0.
AdaptedLayer initialize(const Matrix& w0, const InitScheme& scheme,
                        const Matrix* grad = nullptr,
                        const IndexPartition* partition = nullptr);

// y = w_frozen*x + eta*b*(a*x), never materializing b*a.
Matrix adapted_forward(const AdaptedLayer& layer, const Matrix& x);

struct AdapterGradients {
  Matrix da;      // gradient of the loss w.r.t. a
  Matrix db;      // gradient of the loss w.r.t. b
  Matrix dw_eff;  // gradient w.r.t. the effective weight W'
};

// upstream is dL/dy for the batch (already carrying the batch-mean
// scaling). dW' = upstream * x^T; the factor gradients are the linear
// mappings da = eta * b^T * dW', db = eta * dW' * a^T.
AdapterGradients adapter_gradients(const AdaptedLayer& layer,
                                   const Matrix& upstream, const Matrix& x);

}  // namespace lorga::lora
