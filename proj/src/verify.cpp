#include "lorga/verify.hpp"

#include <algorithm>
#include <cmath>

#include "lorga/analysis.hpp"
#include "lorga/ga_init.hpp"
#include "lorga/linalg.hpp"
#include "lorga/lora.hpp"
#include "lorga/nn.hpp"

namespace lorga::verify {

namespace {

using lorga::Index;
using lorga::Matrix;

nn::Network small_net(std::vector<Index> dims, std::uint64_t seed) {
  nn::NetworkSpec spec;
  spec.layer_dims = std::move(dims);
  spec.activation = nn::Activation::Tanh;
  spec.loss = nn::Loss::Mse;
  spec.init_seed = seed;
  return nn::Network::create(spec);
}

CheckResult check_gradient_linearity(std::uint64_t seed) {
  CheckResult res{"adapter-gradient-linearity", false, 0.0, 0.0,
                  "dA = eta*B^T*dW', dB = eta*dW'*A^T, and dW' equals the base dW at init"};
  auto rng = linalg::make_rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    nn::Network base = small_net({12, 10, 8}, seed + trial);
    Matrix x = linalg::random_gaussian(12, 6, 1.0, rng);
    Matrix t = linalg::random_gaussian(8, 6, 1.0, rng);
    nn::GradientSnapshot base_grads = nn::backward(base, base.forward(x, t));

    nn::Network adapted = base;
    ga_init::GaInitConfig cfg;
    cfg.rank = 2;
    cfg.alpha = 4.0;
    cfg.gamma = 2.0;
    cfg.seed = seed + trial;
    cfg.sampled_batch_size = 6;
    cfg.micro_batch_size = 6;
    ga_init::lora_ga_initialize(adapted, cfg, x, t);

    nn::GradientSnapshot g = nn::backward(adapted, adapted.forward(x, t));
    for (Index l = 0; l < adapted.layer_count(); ++l) {
      const auto& layer = adapted.layers()[static_cast<std::size_t>(l)];
      const Matrix& dweff = g.dw[static_cast<std::size_t>(l)];
      const auto& [da, db] = *g.dab[static_cast<std::size_t>(l)];
      const double eta = layer.adapter->eta;
      worst = std::max(worst,
                       (da - eta * layer.adapter->b.transpose() * dweff).cwiseAbs().maxCoeff());
      worst = std::max(worst,
                       (db - eta * dweff * layer.adapter->a.transpose()).cwiseAbs().maxCoeff());
      worst = std::max(
          worst, (dweff - base_grads.dw[static_cast<std::size_t>(l)]).cwiseAbs().maxCoeff());
    }
  }
  res.measured = worst;
  res.predicted = 1e-12;
  res.pass = worst <= 1e-12;
  return res;
}

CheckResult check_alignment_optimality(std::uint64_t seed) {
  CheckResult res{"svd-initialization-optimality", false, 0.0, 0.0,
                  "criterion at the constructed factors equals the spectrum-tail bound; "
                  "random candidates never beat it"};
  auto rng = linalg::make_rng(seed);
  double worst_rel = 0.0;
  bool all_pass = true;
  for (int trial = 0; trial < 6; ++trial) {
    const Index rows = 12 + 4 * (trial % 3);
    const Index cols = 10 + 2 * (trial % 4);
    const Index rank = 1 + trial % 3;
    Matrix grad = linalg::random_gaussian(rows, cols, 1.0, rng);
    auto rep = analysis::verify_svd_optimality(grad, rank, 1.5, 0.7, 200, rng());
    all_pass = all_pass && rep.pass;
    const double denom = std::max(rep.predicted_optimum, 1e-30);
    worst_rel = std::max(
        worst_rel, std::abs(rep.objective_at_solution - rep.predicted_optimum) / denom);
  }
  res.measured = worst_rel;
  res.predicted = 1e-9;
  res.pass = all_pass && worst_rel <= 1e-9;
  return res;
}

CheckResult check_rank_k_optimality(std::uint64_t seed) {
  CheckResult res{"truncated-svd-residual", false, 0.0, 0.0,
                  "best rank-k residual equals sqrt(tail singular-value energy)"};
  auto rng = linalg::make_rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    Matrix m = linalg::random_gaussian(16, 12, 1.0, rng);
    linalg::SvdFactors f = linalg::svd(m);
    for (Index k : {Index{1}, Index{3}, Index{6}}) {
      double residual = (m - linalg::best_rank_k(m, k)).norm();
      double tail = 0.0;
      for (Index i = k; i < f.s.size(); ++i) tail += f.s[i] * f.s[i];
      double expected = std::sqrt(tail);
      worst = std::max(worst, std::abs(residual - expected) / std::max(1.0, expected));
    }
  }
  res.measured = worst;
  res.predicted = 1e-9;
  res.pass = worst <= 1e-9;
  return res;
}

CheckResult check_scale_stability(std::uint64_t seed) {
  CheckResult res{"zeta-scale-stability", false, 0.0, 0.0,
                  "forward second moment is flat across d_out under the zeta rule "
                  "(max/min ratio, bound 2)"};
  analysis::StabilityProbeConfig cfg;
  cfg.grid = {{64, 64, 4}, {64, 256, 4}, {64, 1024, 4}};
  cfg.samples = 4000;
  cfg.seed = seed;
  cfg.alpha = 1.0;
  cfg.gamma = 1.0;
  auto cells = analysis::stability_probe(cfg, analysis::ZetaRule::LoraGa);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& c : cells) {
    lo = std::min(lo, c.measured_forward);
    hi = std::max(hi, c.measured_forward);
  }
  res.measured = hi / lo;
  res.predicted = 2.0;
  res.pass = res.measured <= 2.0;
  return res;
}

CheckResult check_streaming_memory(std::uint64_t seed) {
  CheckResult res{"streaming-gradient-memory", false, 0.0, 0.0,
                  "peak live per-layer gradient count during initialization"};
  nn::Network net = small_net({8, 8, 8, 8, 8, 8, 8, 8, 8, 8, 8}, seed);
  auto rng = linalg::make_rng(seed);
  Matrix x = linalg::random_gaussian(8, 8, 1.0, rng);
  Matrix t = linalg::random_gaussian(8, 8, 1.0, rng);
  ga_init::GaInitConfig cfg;
  cfg.rank = 2;
  cfg.alpha = 4.0;
  cfg.gamma = 2.0;
  cfg.sampled_batch_size = 8;
  cfg.micro_batch_size = 8;
  nn::GradProbe probe;
  ga_init::lora_ga_initialize(net, cfg, x, t, &probe);
  res.measured = probe.peak;
  res.predicted = 1.0;
  res.pass = probe.peak == 1;
  return res;
}

CheckResult check_accumulation_equivalence(std::uint64_t seed) {
  CheckResult res{"micro-batch-accumulation", false, 0.0, 0.0,
                  "accumulated gradient equals the full-batch gradient per entry"};
  nn::Network net = small_net({10, 12, 6}, seed);
  auto rng = linalg::make_rng(seed);
  Matrix x = linalg::random_gaussian(10, 8, 1.0, rng);
  Matrix t = linalg::random_gaussian(6, 8, 1.0, rng);
  auto full = ga_init::estimate_gradients(net, x, t);
  double worst = 0.0;
  for (Index b : {Index{1}, Index{2}, Index{4}, Index{8}}) {
    auto acc = ga_init::estimate_gradients_accumulated(net, x, t, b);
    for (std::size_t l = 0; l < full.dw.size(); ++l)
      worst = std::max(worst, (acc.dw[l] - full.dw[l]).cwiseAbs().maxCoeff());
  }
  res.measured = worst;
  res.predicted = 1e-12;
  res.pass = worst <= 1e-12;
  return res;
}

}  // namespace

std::vector<CheckResult> run_verification(std::uint64_t seed) {
  return {
      check_gradient_linearity(seed),
      check_alignment_optimality(seed + 1),
      check_rank_k_optimality(seed + 2),
      check_scale_stability(seed + 3),
      check_streaming_memory(seed + 4),
      check_accumulation_equivalence(seed + 5),
  };
}

}  // namespace lorga::verify
