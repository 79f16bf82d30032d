#include "lorga/nn.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lorga/linalg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lorga::nn {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  throw std::logic_error("activation_name: bad value");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string loss_name(Loss l) {
  return l == Loss::Mse ? "mse" : "softmax_cross_entropy";
}

Loss loss_from_name(const std::string& name) {
  if (name == "mse") return Loss::Mse;
  if (name == "softmax_cross_entropy") return Loss::SoftmaxCrossEntropy;
  throw std::invalid_argument("unknown loss: " + name);
}

namespace {

void check_spec(const NetworkSpec& spec) {
  if (spec.layer_dims.size() < 2)
    throw std::invalid_argument("network spec needs at least one linear layer");
  for (Index d : spec.layer_dims)
    if (d < 1) throw std::invalid_argument("network spec has non-positive dimension");
}

Matrix apply_activation(Activation act, const Matrix& z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  throw std::logic_error("apply_activation: bad value");
}

Matrix activation_derivative(Activation act, const Matrix& z) {
  switch (act) {
    case Activation::Identity: return Matrix::Ones(z.rows(), z.cols());
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: {
      Matrix t = z.array().tanh().matrix();
      return (1.0 - t.array().square()).matrix();
    }
  }
  throw std::logic_error("activation_derivative: bad value");
}

// Column-wise softmax with the usual max-shift.
Matrix softmax_columns(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    Vector col = z.col(j);
    double m = col.maxCoeff();
    Vector e = (col.array() - m).exp();
    p.col(j) = e / e.sum();
  }
  return p;
}

// dL/dZ of the mean-over-batch loss with respect to the final pre-activation.
Matrix loss_gradient(Loss loss, const Matrix& prediction, const Matrix& targets) {
  const double n = static_cast<double>(prediction.cols());
  switch (loss) {
    case Loss::Mse: return (prediction - targets) / n;
    case Loss::SoftmaxCrossEntropy:
      return (softmax_columns(prediction) - targets) / n;
  }
  throw std::logic_error("loss_gradient: bad value");
}

}  // namespace

double loss_value(Loss loss, const Matrix& prediction, const Matrix& targets) {
  if (prediction.rows() != targets.rows() || prediction.cols() != targets.cols())
    throw std::invalid_argument("loss_value: prediction/target shape mismatch");
  const double n = static_cast<double>(prediction.cols());
  switch (loss) {
    case Loss::Mse: return 0.5 * (prediction - targets).squaredNorm() / n;
    case Loss::SoftmaxCrossEntropy: {
      double total = 0.0;
      for (Index j = 0; j < prediction.cols(); ++j) {
        Vector col = prediction.col(j);
        double m = col.maxCoeff();
        double lse = m + std::log((col.array() - m).exp().sum());
        total += lse - targets.col(j).dot(col);
      }
      return total / n;
    }
  }
  throw std::logic_error("loss_value: bad value");
}

Network Network::create(const NetworkSpec& spec) {
  check_spec(spec);
  Network net;
  net.spec_ = spec;
  auto rng = linalg::make_rng(spec.init_seed);
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    NetLayer layer;
    const Index d_in = spec.layer_dims[l];
    const Index d_out = spec.layer_dims[l + 1];
    const double bound = std::sqrt(3.0 / static_cast<double>(d_in));
    layer.w = linalg::random_uniform(d_out, d_in, -bound, bound, rng);
    if (spec.use_bias) layer.bias = Vector::Zero(d_out);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

ForwardTrace Network::forward(const Matrix& x, const Matrix& targets) const {
  if (x.cols() < 1) throw std::invalid_argument("forward: empty batch");
  ForwardTrace trace;
  Matrix cur = x;
  for (Index l = 0; l < layer_count(); ++l) {
    const NetLayer& layer = layers_[static_cast<std::size_t>(l)];
    if (cur.rows() != layer.d_in())
      throw std::invalid_argument("forward: layer " + std::to_string(l) + " expects " +
                                  std::to_string(layer.d_in()) + " rows, got " +
                                  std::to_string(cur.rows()));
    trace.inputs.push_back(cur);
    Matrix z = layer.w * cur;
    if (layer.adapter)
      z += layer.adapter->eta * (layer.adapter->b * (layer.adapter->a * cur));
    if (layer.bias.size() > 0) z.colwise() += layer.bias;
    trace.pre.push_back(z);
    cur = (l + 1 < layer_count()) ? apply_activation(spec_.activation, z) : z;
  }
  trace.prediction = trace.pre.back();
  trace.targets = targets;
  trace.loss = loss_value(spec_.loss, trace.prediction, targets);
  if (!std::isfinite(trace.loss)) throw std::runtime_error("forward: non-finite loss");
  return trace;
}

Matrix Network::predict(const Matrix& x) const {
  Matrix cur = x;
  for (Index l = 0; l < layer_count(); ++l) {
    const NetLayer& layer = layers_[static_cast<std::size_t>(l)];
    if (cur.rows() != layer.d_in())
      throw std::invalid_argument("predict: layer " + std::to_string(l) + " shape mismatch");
    Matrix z = layer.w * cur;
    if (layer.adapter)
      z += layer.adapter->eta * (layer.adapter->b * (layer.adapter->a * cur));
    if (layer.bias.size() > 0) z.colwise() += layer.bias;
    cur = (l + 1 < layer_count()) ? apply_activation(spec_.activation, z) : z;
  }
  return cur;
}

void Network::attach_adapter(Index layer, const lora::AdaptedLayer& adapted) {
  if (layer < 0 || layer >= layer_count())
    throw std::invalid_argument("attach_adapter: layer index out of range");
  NetLayer& nl = layers_[static_cast<std::size_t>(layer)];
  if (adapted.w_frozen.rows() != nl.d_out() || adapted.w_frozen.cols() != nl.d_in())
    throw std::invalid_argument("attach_adapter: shape mismatch at layer " +
                                std::to_string(layer));
  nl.w = adapted.w_frozen;
  nl.adapter = adapted.adapter;
  nl.adapter_init = adapted.adapter;
}

namespace {

// Backpropagates delta (dL/dZ_l) to dL/dZ_{l-1} through the effective
// weight and the interior activation.
Matrix propagate_delta(const NetLayer& layer, Activation act, const Matrix& delta,
                       const Matrix& pre_below) {
  Matrix back = layer.adapter
                    ? (layer.w.transpose() * delta +
                       layer.adapter->eta *
                           (layer.adapter->a.transpose() * (layer.adapter->b.transpose() * delta)))
                        .eval()
                    : (layer.w.transpose() * delta).eval();
  return back.cwiseProduct(activation_derivative(act, pre_below));
}

}  // namespace

GradientSnapshot backward(const Network& net, const ForwardTrace& trace) {
  const Index L = net.layer_count();
  if (static_cast<Index>(trace.inputs.size()) != L)
    throw std::invalid_argument("backward: trace does not match network");

  GradientSnapshot snap;
  snap.dw.resize(static_cast<std::size_t>(L));
  snap.dbias.resize(static_cast<std::size_t>(L));
  snap.dab.resize(static_cast<std::size_t>(L));

  Matrix delta = loss_gradient(net.spec().loss, trace.prediction, trace.targets);
  for (Index l = L - 1; l >= 0; --l) {
    const NetLayer& layer = net.layers()[static_cast<std::size_t>(l)];
    const Matrix& x = trace.inputs[static_cast<std::size_t>(l)];
    Matrix dw = delta * x.transpose();
    if (layer.adapter) {
      snap.dab[static_cast<std::size_t>(l)] = std::make_pair(
          Matrix(layer.adapter->eta * layer.adapter->b.transpose() * dw),
          Matrix(layer.adapter->eta * dw * layer.adapter->a.transpose()));
    }
    snap.dw[static_cast<std::size_t>(l)] = std::move(dw);
    if (layer.bias.size() > 0)
      snap.dbias[static_cast<std::size_t>(l)] = delta.rowwise().sum();
    if (l > 0)
      delta = propagate_delta(layer, net.spec().activation, delta,
                              trace.pre[static_cast<std::size_t>(l - 1)]);
  }
  return snap;
}

void backward_streaming(const Network& net, const ForwardTrace& trace,
                        const std::function<void(Index, const Matrix&)>& visit,
                        GradProbe* probe) {
  const Index L = net.layer_count();
  if (static_cast<Index>(trace.inputs.size()) != L)
    throw std::invalid_argument("backward_streaming: trace does not match network");

  Matrix delta = loss_gradient(net.spec().loss, trace.prediction, trace.targets);
  for (Index l = L - 1; l >= 0; --l) {
    const NetLayer& layer = net.layers()[static_cast<std::size_t>(l)];
    const Matrix& x = trace.inputs[static_cast<std::size_t>(l)];
    {
      Matrix dw = delta * x.transpose();
      if (probe) probe->acquire();
      try {
        visit(l, dw);
      } catch (...) {
        if (probe) probe->release();
        throw;
      }
      if (probe) probe->release();
    }
    if (l > 0)
      delta = propagate_delta(layer, net.spec().activation, delta,
                              trace.pre[static_cast<std::size_t>(l - 1)]);
  }
}

namespace {

Matrix vec_as_matrix(const Vector& v) {
  Matrix m(v.size(), 1);
  m.col(0) = v;
  return m;
}

}  // namespace

void save_network(const Network& net, const std::string& dir) {
  fs::create_directories(dir);
  const NetworkSpec& spec = net.spec();
  json manifest;
  manifest["layer_dims"] = spec.layer_dims;
  manifest["activation"] = activation_name(spec.activation);
  manifest["loss"] = loss_name(spec.loss);
  manifest["init_seed"] = spec.init_seed;
  manifest["use_bias"] = spec.use_bias;
  json layers = json::array();
  for (Index l = 0; l < net.layer_count(); ++l) {
    const NetLayer& layer = net.layers()[static_cast<std::size_t>(l)];
    std::string stem = "layer" + std::to_string(l);
    io::save_lga1(layer.w, dir + "/" + stem + "_w.lga1");
    json jl;
    jl["has_bias"] = layer.bias.size() > 0;
    if (layer.bias.size() > 0)
      io::save_lga1(vec_as_matrix(layer.bias), dir + "/" + stem + "_bias.lga1");
    jl["has_adapter"] = layer.adapter.has_value();
    if (layer.adapter) {
      io::save_lga1(layer.adapter->a, dir + "/" + stem + "_a.lga1");
      io::save_lga1(layer.adapter->b, dir + "/" + stem + "_b.lga1");
      io::save_lga1(layer.adapter_init->a, dir + "/" + stem + "_a_init.lga1");
      io::save_lga1(layer.adapter_init->b, dir + "/" + stem + "_b_init.lga1");
      jl["rank"] = layer.adapter->rank;
      jl["alpha"] = layer.adapter->alpha;
      jl["eta"] = layer.adapter->eta;
    }
    layers.push_back(jl);
  }
  manifest["layers"] = layers;
  std::ofstream os(dir + "/manifest.json");
  os << manifest.dump(2) << "\n";
}

Network load_network(const std::string& dir) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw std::runtime_error("cannot open manifest in " + dir);
  json manifest = json::parse(is);
  NetworkSpec spec;
  spec.layer_dims = manifest.at("layer_dims").get<std::vector<Index>>();
  spec.activation = activation_from_name(manifest.at("activation").get<std::string>());
  spec.loss = loss_from_name(manifest.at("loss").get<std::string>());
  spec.init_seed = manifest.at("init_seed").get<std::uint64_t>();
  spec.use_bias = manifest.at("use_bias").get<bool>();
  Network net = Network::create(spec);
  const json& layers = manifest.at("layers");
  for (Index l = 0; l < net.layer_count(); ++l) {
    NetLayer& layer = net.layers()[static_cast<std::size_t>(l)];
    std::string stem = "layer" + std::to_string(l);
    layer.w = io::load_lga1(dir + "/" + stem + "_w.lga1");
    const json& jl = layers.at(static_cast<std::size_t>(l));
    if (jl.at("has_bias").get<bool>())
      layer.bias = io::load_lga1(dir + "/" + stem + "_bias.lga1").col(0);
    if (jl.at("has_adapter").get<bool>()) {
      lora::LoraAdapter adapter;
      adapter.a = io::load_lga1(dir + "/" + stem + "_a.lga1");
      adapter.b = io::load_lga1(dir + "/" + stem + "_b.lga1");
      adapter.rank = jl.at("rank").get<Index>();
      adapter.alpha = jl.at("alpha").get<double>();
      adapter.eta = jl.at("eta").get<double>();
      lora::LoraAdapter init = adapter;
      init.a = io::load_lga1(dir + "/" + stem + "_a_init.lga1");
      init.b = io::load_lga1(dir + "/" + stem + "_b_init.lga1");
      layer.adapter = std::move(adapter);
      layer.adapter_init = std::move(init);
    }
  }
  return net;
}

}  // namespace lorga::nn
