#include "lorga/ga_init.hpp"

#include <cmath>

#include "lorga/analysis.hpp"
#include "lorga/linalg.hpp"

namespace lorga::ga_init {

namespace {

void check_batch(const Matrix& inputs, const Matrix& targets) {
  if (inputs.cols() < 1) throw std::invalid_argument("estimate_gradients: empty batch");
  if (inputs.cols() != targets.cols())
    throw std::invalid_argument("estimate_gradients: input/target batch size mismatch");
}

bool layer_excluded(const GaInitConfig& config, Index layer) {
  for (Index e : config.exclude_layers)
    if (e == layer) return true;
  return false;
}

LayerInitReport make_layer_report(Index layer, const Matrix& grad,
                                  const linalg::SvdFactors& f,
                                  const lora::AdaptedLayer& adapted,
                                  const GaInitConfig& config) {
  LayerInitReport rep;
  rep.layer = layer;
  rep.d_out = grad.rows();
  rep.d_in = grad.cols();
  rep.rank = config.rank;
  rep.eta = adapted.adapter.eta;
  rep.gamma = config.gamma;
  const double r = static_cast<double>(config.rank);
  rep.zeta = config.alpha * config.alpha / (config.gamma * config.gamma) *
             std::sqrt(static_cast<double>(grad.rows()) / (r * r));
  const Index keep = std::min<Index>(4 * config.rank, f.s.size());
  rep.singular_values.assign(f.s.data(), f.s.data() + keep);
  std::vector<double> all(f.s.data(), f.s.data() + f.s.size());
  rep.coverage_2r = analysis::coverage(all, std::min<Index>(2 * config.rank, f.s.size()));
  analysis::CriterionInput ci{grad, adapted.adapter.a, adapted.adapter.b, rep.eta, rep.zeta};
  rep.criterion_residual = analysis::criterion(ci);
  rep.predicted_residual = analysis::tail_residual(f.s, config.rank, rep.zeta);
  return rep;
}

}  // namespace

nn::GradientSnapshot estimate_gradients(const nn::Network& net, const Matrix& inputs,
                                        const Matrix& targets, nn::GradProbe* probe) {
  check_batch(inputs, targets);
  nn::ForwardTrace trace = net.forward(inputs, targets);
  nn::GradientSnapshot snap;
  snap.dw.resize(static_cast<std::size_t>(net.layer_count()));
  snap.dbias.resize(static_cast<std::size_t>(net.layer_count()));
  snap.dab.resize(static_cast<std::size_t>(net.layer_count()));
  nn::backward_streaming(
      net, trace,
      [&](Index l, const Matrix& dw) { snap.dw[static_cast<std::size_t>(l)] = dw; },
      probe);
  return snap;
}

nn::GradientSnapshot estimate_gradients_accumulated(const nn::Network& net,
                                                    const Matrix& inputs,
                                                    const Matrix& targets,
                                                    Index micro_batch_size,
                                                    nn::GradProbe* probe) {
  check_batch(inputs, targets);
  const Index n = inputs.cols();
  const Index b = micro_batch_size;
  if (b < 1 || b > n || n % b != 0)
    throw std::invalid_argument(
        "estimate_gradients_accumulated: micro-batch size must divide the batch size");
  if (b == n) return estimate_gradients(net, inputs, targets, probe);

  const double weight = static_cast<double>(b) / static_cast<double>(n);
  nn::GradientSnapshot avg;
  avg.dw.resize(static_cast<std::size_t>(net.layer_count()));
  avg.dbias.resize(static_cast<std::size_t>(net.layer_count()));
  avg.dab.resize(static_cast<std::size_t>(net.layer_count()));
  for (Index l = 0; l < net.layer_count(); ++l) {
    const auto& layer = net.layers()[static_cast<std::size_t>(l)];
    avg.dw[static_cast<std::size_t>(l)] = Matrix::Zero(layer.d_out(), layer.d_in());
  }
  for (Index start = 0; start < n; start += b) {
    nn::ForwardTrace trace =
        net.forward(inputs.middleCols(start, b), targets.middleCols(start, b));
    nn::backward_streaming(
        net, trace,
        [&](Index l, const Matrix& dw) {
          avg.dw[static_cast<std::size_t>(l)] += weight * dw;
        },
        probe);
  }
  return avg;
}

InitReport lora_ga_initialize(nn::Network& net, const GaInitConfig& config,
                              const Matrix& inputs, const Matrix& targets,
                              nn::GradProbe* probe) {
  check_batch(inputs, targets);
  if (config.sampled_batch_size < 1 || config.micro_batch_size < 1 ||
      config.micro_batch_size > config.sampled_batch_size ||
      config.sampled_batch_size % config.micro_batch_size != 0)
    throw std::invalid_argument("lora_ga_initialize: bad batch configuration");

  for (Index l = 0; l < net.layer_count(); ++l) {
    if (layer_excluded(config, l)) continue;
    const auto& layer = net.layers()[static_cast<std::size_t>(l)];
    if (2 * config.rank > std::min(layer.d_in(), layer.d_out()))
      throw std::invalid_argument("lora_ga_initialize: layer " + std::to_string(l) +
                                  " is too small for rank " +
                                  std::to_string(config.rank));
  }

  lora::InitScheme scheme;
  scheme.kind = lora::SchemeKind::LoraGa;
  scheme.alpha = config.alpha;
  scheme.rank = config.rank;
  scheme.gamma = config.gamma;
  scheme.seed = config.seed;
  const lora::IndexPartition* partition =
      config.partition ? &*config.partition : nullptr;

  InitReport report;
  report.seed = config.seed;
  report.sampled_batch_size = inputs.cols();
  report.micro_batch_size = config.micro_batch_size;
  report.layers.resize(static_cast<std::size_t>(net.layer_count()));
  std::vector<std::optional<lora::AdaptedLayer>> adapted(
      static_cast<std::size_t>(net.layer_count()));

  auto build_layer = [&](Index l, const Matrix& dw) {
    if (layer_excluded(config, l)) return;
    const auto& layer = net.layers()[static_cast<std::size_t>(l)];
    linalg::SvdFactors f = linalg::svd(dw);
    lora::AdaptedLayer al = lora::initialize(layer.w, scheme, &dw, partition);
    report.layers[static_cast<std::size_t>(l)] =
        make_layer_report(l, dw, f, al, config);
    adapted[static_cast<std::size_t>(l)] = std::move(al);
  };

  if (config.micro_batch_size == inputs.cols()) {
    // One streaming sweep; each layer's gradient is consumed by its SVD
    // and adapter construction before the next gradient appears.
    nn::ForwardTrace trace = net.forward(inputs, targets);
    nn::backward_streaming(net, trace, build_layer, probe);
  } else {
    nn::GradientSnapshot snap = estimate_gradients_accumulated(
        net, inputs, targets, config.micro_batch_size, probe);
    for (Index l = net.layer_count() - 1; l >= 0; --l)
      build_layer(l, snap.dw[static_cast<std::size_t>(l)]);
  }

  for (Index l = 0; l < net.layer_count(); ++l)
    if (adapted[static_cast<std::size_t>(l)])
      net.attach_adapter(l, *adapted[static_cast<std::size_t>(l)]);

  std::erase_if(report.layers, [](const LayerInitReport& r) { return r.d_out == 0; });
  return report;
}

}  // namespace lorga::ga_init
