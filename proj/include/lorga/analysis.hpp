#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lorga/lora.hpp"
#include "lorga/matrix.hpp"
#include "lorga/nn.hpp"

namespace lorga::analysis {

struct CriterionInput {
  Matrix grad;  // dW, d_out x d_in
  Matrix a;     // r x d_in
  Matrix b;     // d_out x r
  double eta = 0.0;
  double zeta = 0.0;
};

// || eta^2 * dW * A^T A + eta^2 * B B^T * dW - zeta * dW ||_F
double criterion(const CriterionInput& in);

// zeta * sqrt(sum of squared singular values past index 2r).
double tail_residual(const Vector& singular_values, Index rank, double zeta);

struct OptimalityReport {
  double objective_at_solution = 0.0;
  double predicted_optimum = 0.0;   // zeta * sqrt(tail energy)
  double best_random_candidate = 0.0;
  bool pass = false;
};

// Checks that the constructed SVD solution attains the predicted optimum
// and that `trials` random orthonormal candidates never beat it.
OptimalityReport verify_svd_optimality(const Matrix& grad, Index rank, double zeta,
                               double eta, int trials, std::uint64_t seed);

// Fraction of squared singular-value mass captured by the top k values.
// Returns 0 for an all-zero spectrum.
double coverage(const std::vector<double>& singular_values, Index k);

struct CoverageCurve {
  std::vector<double> singular_values;  // sorted non-increasing
  std::vector<double> cumulative;       // c_k, non-decreasing, ends at 1
};

CoverageCurve coverage_curve(const Vector& singular_values);

enum class ZetaRule { LoraGa, Constant };

struct StabilityCell {
  Index d_in = 0;
  Index d_out = 0;
  Index rank = 0;
  double zeta = 0.0;
  double measured_forward = 0.0;
  double predicted_forward = 0.0;   // zeta^2 r^2 / (alpha^2 d_out)
  double measured_backward = 0.0;
  double predicted_backward = 0.0;  // zeta^2 r^2 / (alpha^2 d_in)
  bool skipped = false;             // cell violates 2r <= min(d_in, d_out)
};

struct StabilityProbeConfig {
  std::vector<std::array<Index, 3>> grid;  // (d_in, d_out, rank)
  int samples = 10000;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  double gamma = 1.0;        // LoraGa rule
  double constant_zeta = 1.0;  // Constant rule
};

// Monte-Carlo second moments of the adapter map y = eta*B*A*x with
// randomly drawn orthonormal factors scaled by sqrt(zeta)/eta, unit
// second-moment i.i.d. inputs, and an all-ones upstream vector for the
// backward direction.
std::vector<StabilityCell> stability_probe(const StabilityProbeConfig& cfg,
                                           ZetaRule rule);

struct AlignmentResult {
  Index layer = 0;
  double cos_similarity = 0.0;
  double residual = 0.0;
  double predicted_residual = 0.0;
};

// Takes one SGD step of size lambda on the adapter factors only and
// compares the realized adapter-weight delta of each adapted layer with
// the scaled full-fine-tune update zeta*lambda*dW. The two networks must
// agree at the initial point.
std::vector<AlignmentResult> first_step_alignment(const nn::Network& base,
                                                  const nn::Network& adapted,
                                                  const Matrix& inputs,
                                                  const Matrix& targets,
                                                  double lambda, double gamma);

}  // namespace lorga::analysis
