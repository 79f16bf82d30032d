#include "lorga/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lorga/linalg.hpp"

namespace lorga::train {

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw std::invalid_argument("sgd_step: shape mismatch");
  param -= lr * grad;
}

void adamw_step(AdamWState& state, Matrix& param, const Matrix& grad, double lr,
                Index step, const TrainConfig& cfg) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw std::invalid_argument("adamw_step: shape mismatch");
  if (state.m.size() == 0) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
  }
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  Matrix m_hat = state.m / bc1;
  Matrix v_hat = state.v / bc2;
  param -= lr * (m_hat.array() / (v_hat.array().sqrt() + cfg.epsilon)).matrix();
  if (cfg.weight_decay != 0.0) param -= lr * cfg.weight_decay * param;
}

double lr_at(const TrainConfig& cfg, Index step) {
  if (step < 0 || step >= cfg.steps) throw std::invalid_argument("lr_at: step out of range");
  if (cfg.schedule == Schedule::Constant) return cfg.learning_rate;
  const auto warmup = static_cast<Index>(
      std::ceil(cfg.warmup_ratio * static_cast<double>(cfg.steps)));
  if (warmup > 0 && step <= warmup)
    return cfg.learning_rate * static_cast<double>(step) / static_cast<double>(warmup);
  const Index decay_steps = cfg.steps - warmup;
  if (decay_steps <= 0) return cfg.learning_rate;
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(decay_steps);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
}

namespace {

// Pointers into the network's trainable tensors together with a way to
// read the matching gradient out of a snapshot.
struct ParamRef {
  Matrix* param;
  Index layer;
  enum class Slot { W, A, B } slot;
};

std::vector<ParamRef> collect_params(nn::Network& net, Trainable trainable) {
  std::vector<ParamRef> refs;
  for (Index l = 0; l < net.layer_count(); ++l) {
    auto& layer = net.layers()[static_cast<std::size_t>(l)];
    if (layer.adapter) {
      refs.push_back({&layer.adapter->a, l, ParamRef::Slot::A});
      refs.push_back({&layer.adapter->b, l, ParamRef::Slot::B});
      if (trainable == Trainable::Full)
        refs.push_back({&layer.w, l, ParamRef::Slot::W});
    } else if (trainable == Trainable::Full) {
      refs.push_back({&layer.w, l, ParamRef::Slot::W});
    }
  }
  return refs;
}

const Matrix& grad_for(const nn::GradientSnapshot& snap, const ParamRef& ref) {
  const auto l = static_cast<std::size_t>(ref.layer);
  switch (ref.slot) {
    case ParamRef::Slot::W: return snap.dw[l];
    case ParamRef::Slot::A: return snap.dab[l]->first;
    case ParamRef::Slot::B: return snap.dab[l]->second;
  }
  throw std::logic_error("grad_for: bad slot");
}

}  // namespace

MetricsLog run_training(nn::Network& net, const Matrix& inputs, const Matrix& targets,
                        const TrainConfig& cfg) {
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("run_training: lr must be > 0");
  if (cfg.steps < 1) throw std::invalid_argument("run_training: steps must be >= 1");
  if (cfg.warmup_ratio < 0.0 || cfg.warmup_ratio >= 1.0)
    throw std::invalid_argument("run_training: warmup_ratio out of range");

  const Index n = inputs.cols();
  const Index bs = std::min(cfg.batch_size, n);

  std::vector<ParamRef> params = collect_params(net, cfg.trainable);
  std::vector<AdamWState> states(params.size());

  MetricsLog log;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  Index step = 0;
  Index epoch = 0;
  std::vector<double> window;
  while (step < cfg.steps) {
    auto epoch_rng = linalg::make_rng(cfg.seed + 0x9e3779b97f4a7c15ull * (epoch + 1));
    std::shuffle(order.begin(), order.end(), epoch_rng);
    for (Index start = 0; start + bs <= n && step < cfg.steps; start += bs) {
      Matrix x(inputs.rows(), bs), t(targets.rows(), bs);
      for (Index j = 0; j < bs; ++j) {
        x.col(j) = inputs.col(order[static_cast<std::size_t>(start + j)]);
        t.col(j) = targets.col(order[static_cast<std::size_t>(start + j)]);
      }

      const double lr = lr_at(cfg, step);
      nn::ForwardTrace trace = net.forward(x, t);
      const double loss = trace.loss;
      if (!std::isfinite(loss) || loss > 1e6) {
        log.diverged = true;
        log.divergence_step = step;
        return log;
      }
      nn::GradientSnapshot snap = nn::backward(net, trace);

      for (std::size_t p = 0; p < params.size(); ++p) {
        const Matrix& g = grad_for(snap, params[p]);
        if (!g.allFinite()) {
          log.diverged = true;
          log.divergence_step = step;
          return log;
        }
        if (cfg.optimizer == OptimizerKind::Sgd)
          sgd_step(*params[p].param, g, lr);
        else
          adamw_step(states[p], *params[p].param, g, lr, step + 1, cfg);
      }

      log.records.push_back({step, loss, lr});
      log.final_loss = loss;
      window.push_back(loss);
      if (static_cast<int>(window.size()) > log.smoothing_window)
        window.erase(window.begin());
      if (cfg.threshold > 0.0 && !log.steps_to_threshold &&
          static_cast<int>(window.size()) == log.smoothing_window) {
        const double avg = std::accumulate(window.begin(), window.end(), 0.0) /
                           static_cast<double>(window.size());
        if (avg < cfg.threshold) log.steps_to_threshold = step;
      }
      ++step;
    }
    ++epoch;
  }
  return log;
}

}  // namespace lorga::train
