#include "lorga/lora.hpp"

#include <cmath>

#include "lorga/linalg.hpp"

namespace lorga::lora {

std::string scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Vanilla: return "vanilla";
    case SchemeKind::Gaussian: return "gaussian";
    case SchemeKind::GaussianSo: return "gaussian_so";
    case SchemeKind::GradApprox: return "grad_approx_ga";
    case SchemeKind::LoraGa: return "lora_ga";
  }
  throw std::logic_error("scheme_name: bad kind");
}

SchemeKind scheme_from_name(const std::string& name) {
  if (name == "vanilla") return SchemeKind::Vanilla;
  if (name == "gaussian") return SchemeKind::Gaussian;
  if (name == "gaussian_so") return SchemeKind::GaussianSo;
  if (name == "grad_approx_ga") return SchemeKind::GradApprox;
  if (name == "lora_ga") return SchemeKind::LoraGa;
  throw std::invalid_argument("unknown scheme: " + name);
}

IndexPartition IndexPartition::standard(Index rank) {
  IndexPartition p;
  for (Index i = 0; i < rank; ++i) p.for_a.push_back(i);
  for (Index i = rank; i < 2 * rank; ++i) p.for_b.push_back(i);
  return p;
}

namespace {

bool needs_gamma(SchemeKind kind) {
  return kind == SchemeKind::GaussianSo || kind == SchemeKind::LoraGa;
}

bool needs_grad(SchemeKind kind) {
  return kind == SchemeKind::GradApprox || kind == SchemeKind::LoraGa;
}

}  // namespace

ScalingConstants compute_scaling(SchemeKind kind, double alpha, Index rank,
                                 std::optional<double> gamma, Index d_out) {
  if (rank < 1) throw std::invalid_argument("compute_scaling: rank must be >= 1");
  if (alpha <= 0.0) throw std::invalid_argument("compute_scaling: alpha must be > 0");
  if (needs_gamma(kind)) {
    if (!gamma) throw std::invalid_argument("compute_scaling: " + scheme_name(kind) +
                                            " requires gamma");
    if (*gamma <= 0.0) throw std::invalid_argument("compute_scaling: gamma must be > 0");
  }

  ScalingConstants c;
  const double r = static_cast<double>(rank);
  const double root4_dout = std::pow(static_cast<double>(d_out), 0.25);
  switch (kind) {
    case SchemeKind::Vanilla:
    case SchemeKind::Gaussian:
    case SchemeKind::GradApprox:
      c.eta = alpha / r;
      break;
    case SchemeKind::GaussianSo:
      c.eta = alpha / std::sqrt(r);
      c.factor = root4_dout / std::sqrt(*gamma);
      break;
    case SchemeKind::LoraGa:
      c.eta = alpha / std::sqrt(r);
      c.zeta = (alpha * alpha) / (*gamma * *gamma) *
               std::sqrt(static_cast<double>(d_out) / (r * r));
      c.factor = root4_dout / *gamma;
      break;
  }
  return c;
}

AdaptedLayer initialize(const Matrix& w0, const InitScheme& scheme,
                        const Matrix* grad, const IndexPartition* partition) {
  const Index d_out = w0.rows();
  const Index d_in = w0.cols();
  const Index r = scheme.rank;
  if (r < 1) throw std::invalid_argument("initialize: rank must be >= 1");

  if (needs_grad(scheme.kind)) {
    if (!grad)
      throw std::invalid_argument("initialize: " + scheme_name(scheme.kind) +
                                  " requires an estimated gradient");
    if (grad->rows() != d_out || grad->cols() != d_in)
      throw std::invalid_argument("initialize: gradient shape mismatch");
    if (2 * r > std::min(d_in, d_out))
      throw std::invalid_argument("initialize: 2r exceeds min(d_in, d_out)");
  }

  ScalingConstants sc = compute_scaling(scheme.kind, scheme.alpha, r,
                                        scheme.gamma, d_out);

  LoraAdapter adapter;
  adapter.rank = r;
  adapter.alpha = scheme.alpha;
  adapter.eta = sc.eta;

  auto rng = linalg::make_rng(scheme.seed);
  switch (scheme.kind) {
    case SchemeKind::Vanilla: {
      const double bound = std::sqrt(3.0 / static_cast<double>(d_in));
      adapter.a = linalg::random_uniform(r, d_in, -bound, bound, rng);
      adapter.b = Matrix::Zero(d_out, r);
      break;
    }
    case SchemeKind::Gaussian:
    case SchemeKind::GaussianSo: {
      adapter.a = sc.factor *
                  linalg::random_gaussian(r, d_in, 1.0 / std::sqrt(double(d_out)), rng);
      adapter.b = sc.factor *
                  linalg::random_gaussian(d_out, r, 1.0 / std::sqrt(double(d_in)), rng);
      break;
    }
    case SchemeKind::GradApprox:
    case SchemeKind::LoraGa: {
      linalg::SvdFactors f = linalg::svd(*grad);
      IndexPartition std_part = IndexPartition::standard(r);
      const IndexPartition& part = partition ? *partition : std_part;
      if (static_cast<Index>(part.for_a.size()) != r ||
          static_cast<Index>(part.for_b.size()) != r)
        throw std::invalid_argument("initialize: index partition must have r entries per side");
      adapter.a = Matrix(r, d_in);
      adapter.b = Matrix(d_out, r);
      for (Index i = 0; i < r; ++i) {
        adapter.a.row(i) = sc.factor * f.v.col(part.for_a[i]).transpose();
        adapter.b.col(i) = sc.factor * f.u.col(part.for_b[i]);
      }
      break;
    }
  }

  AdaptedLayer layer;
  layer.adapter = std::move(adapter);
  if (layer.adapter.b.isZero(0.0)) {
    layer.w_frozen = w0;
  } else {
    layer.w_frozen = w0 - layer.adapter.eta * layer.adapter.b * layer.adapter.a;
  }
  return layer;
}

Matrix adapted_forward(const AdaptedLayer& layer, const Matrix& x) {
  if (x.rows() != layer.w_frozen.cols())
    throw std::invalid_argument("adapted_forward: input has " + std::to_string(x.rows()) +
                                " rows, layer expects " + std::to_string(layer.w_frozen.cols()));
  return layer.w_frozen * x + layer.adapter.eta * (layer.adapter.b * (layer.adapter.a * x));
}

AdapterGradients adapter_gradients(const AdaptedLayer& layer,
                                   const Matrix& upstream, const Matrix& x) {
  if (upstream.rows() != layer.w_frozen.rows() || x.rows() != layer.w_frozen.cols() ||
      upstream.cols() != x.cols())
    throw std::invalid_argument("adapter_gradients: shape mismatch");
  AdapterGradients g;
  g.dw_eff = upstream * x.transpose();
  g.da = layer.adapter.eta * layer.adapter.b.transpose() * g.dw_eff;
  g.db = layer.adapter.eta * g.dw_eff * layer.adapter.a.transpose();
  return g;
}

}  // namespace lorga::lora
