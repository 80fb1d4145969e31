#include "pnet/training.hpp"

#include <cmath>
#include <string>

#include "pnet/activation.hpp"
#include "pnet/baseline.hpp"
#include "pnet/errors.hpp"

namespace pnet {

void validate(const TrainConfig& cfg) {
  if (!(cfg.alpha_w > 0.0)) throw InputError("train: alpha_w must be > 0");
  if (!(cfg.alpha_p >= 0.0)) throw InputError("train: alpha_p must be >= 0");
  if (cfg.max_iters < 1) throw InputError("train: max_iters must be >= 1");
  if (!(cfg.max_error >= 0.0)) throw InputError("train: max_error must be >= 0");
  if (!(cfg.max_gradient >= 0.0)) throw InputError("train: max_gradient must be >= 0");
  if (cfg.inner_iters < 1) throw InputError("train: inner_iters must be >= 1");
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const auto& layer : net.layers) {
    g.weights.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
    g.p.push_back(Eigen::VectorXd::Zero(layer.p.size()));
  }
  return g;
}

void Gradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& p_grad : p) p_grad.setZero();
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k] += other.weights[k];
    p[k] += other.p[k];
  }
  return *this;
}

Gradients& Gradients::operator*=(double scale) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k] *= scale;
    p[k] *= scale;
  }
  return *this;
}

double Gradients::max_abs() const {
  double best = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].size()) best = std::max(best, weights[k].cwiseAbs().maxCoeff());
    if (p[k].size()) best = std::max(best, p[k].cwiseAbs().maxCoeff());
  }
  return best;
}

double mse(const Eigen::Ref<const RowMatrix>& outputs, const Eigen::Ref<const RowMatrix>& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
    throw DimensionError("mse: outputs and targets differ in shape");
  }
  if (outputs.rows() < 1) throw DimensionError("mse: empty batch");
  return (outputs - targets).squaredNorm() / (2.0 * static_cast<double>(outputs.rows()));
}

void backprop(const Network& net, const ForwardTrace& trace, const Eigen::Ref<const Eigen::VectorXd>& target,
              Gradients& grad) {
  const std::size_t m = net.layers.size();
  if (trace.activations.size() != m || trace.outputs.size() != m + 1 || trace.output().size() != target.size() ||
      grad.weights.size() != m) {
    throw DimensionError("backprop: trace, target and network are inconsistent");
  }

  // Output layer error term.
  const Layer& out_layer = net.layers[m - 1];
  const Eigen::VectorXd& y_hat = trace.outputs[m];
  const Eigen::VectorXd err = y_hat - target;
  Eigen::VectorXd delta(err.size());
  switch (out_layer.activation) {
    case Activation::implicit:
      for (Eigen::Index j = 0; j < err.size(); ++j) {
        const ActivationDerivatives d = derivatives(y_hat[j], net.activation_params(m - 1, j));
        delta[j] = err[j] * d.dv_da;
        grad.p[m - 1][j] += err[j] * d.dv_dp;
      }
      break;
    case Activation::softmax:
      delta = err.array() * y_hat.array() * (1.0 - y_hat.array());
      break;
    default:
      for (Eigen::Index j = 0; j < err.size(); ++j) {
        delta[j] = err[j] * fixed_deriv(out_layer.activation, trace.activations[m - 1][j]);
      }
      break;
  }

  Eigen::VectorXd back;
  for (std::size_t k = m; k-- > 0;) {
    const Layer& layer = net.layers[k];
    const Eigen::VectorXd& v_prev = trace.outputs[k];
    grad.weights[k].col(0) += delta;
    grad.weights[k].rightCols(layer.fan_in()).noalias() += delta * v_prev.transpose();
    if (k == 0) break;

    // Propagate to layer k (index k-1), whose outputs are v_prev.
    back.noalias() = layer.weights.rightCols(layer.fan_in()).transpose() * delta;
    const Layer& below = net.layers[k - 1];
    delta.resize(back.size());
    if (below.activation == Activation::implicit) {
      for (Eigen::Index j = 0; j < back.size(); ++j) {
        const ActivationDerivatives d = derivatives(v_prev[j], net.activation_params(k - 1, j));
        grad.p[k - 1][j] += d.dv_dp * back[j];
        delta[j] = d.dv_da * back[j];
      }
    } else {
      for (Eigen::Index j = 0; j < back.size(); ++j) {
        delta[j] = fixed_deriv(below.activation, trace.activations[k - 1][j]) * back[j];
      }
    }
  }
}

Gradients backprop(const Network& net, const ForwardTrace& trace, const Eigen::Ref<const Eigen::VectorXd>& target) {
  Gradients grad = Gradients::zeros_like(net);
  backprop(net, trace, target, grad);
  return grad;
}

namespace {

void check_compatible(const Network& net, const Dataset& data) {
  if (data.feature_dim() != net.input_dim || data.target_dim() != net.output_dim()) {
    throw DimensionError("dataset dimensions (" + std::to_string(data.feature_dim()) + " -> " +
                         std::to_string(data.target_dim()) + ") do not match the network (" +
                         std::to_string(net.input_dim) + " -> " + std::to_string(net.output_dim()) + ")");
  }
  if (data.task != net.head) throw InputError("dataset task does not match the network head");
}

}  // namespace

namespace {

// Whole-batch forward pass, one row per sample: a[k] and v[k + 1] hold layer
// k + 1's activations and outputs, v[0] the inputs.
struct BatchTrace {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::MatrixXd> v;
};

Eigen::VectorXd layer_thresholds(const Network& net, std::size_t k) {
  const Layer& layer = net.layers[k];
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layer.p.size());
  for (Eigen::Index j = 0; j < layer.p.size(); ++j) {
    const ActivationParams params = net.activation_params(k, j);
    if (params.p > 2.0 && params.lambda > 0.0) out[j] = threshold_input(params);
  }
  return out;
}

void forward_batch(const Network& net, const Dataset& data, BatchTrace& trace) {
  if (!data.inputs.allFinite()) throw InputError("forward: non-finite input");
  const std::size_t m = net.layers.size();
  trace.a.resize(m);
  trace.v.resize(m + 1);
  trace.v[0] = data.inputs;
  for (std::size_t k = 0; k < m; ++k) {
    const Layer& layer = net.layers[k];
    Eigen::MatrixXd& a = trace.a[k];
    Eigen::MatrixXd& v = trace.v[k + 1];
    a.noalias() = trace.v[k] * layer.weights.rightCols(layer.fan_in()).transpose();
    a.rowwise() += layer.weights.col(0).transpose();
    v.resize(a.rows(), a.cols());
    switch (layer.activation) {
      case Activation::implicit: {
        const Eigen::VectorXd thresholds = layer_thresholds(net, k);
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
          const ActivationParams params = net.activation_params(k, j);
          for (Eigen::Index d = 0; d < a.rows(); ++d) v(d, j) = evaluate(a(d, j), params, thresholds[j]);
        }
        break;
      }
      case Activation::softmax:
        for (Eigen::Index d = 0; d < a.rows(); ++d) v.row(d) = softmax(a.row(d).transpose()).transpose();
        break;
      default:
        v = a.unaryExpr([kind = layer.activation](double x) { return fixed_eval(kind, x); });
        break;
    }
  }
}

}  // namespace

BatchEvaluation evaluate_batch(const Network& net, const Dataset& data) {
  check_compatible(net, data);
  validate(net);
  BatchTrace trace;
  forward_batch(net, data, trace);

  const std::size_t m = net.layers.size();
  const double n = static_cast<double>(data.size());
  BatchEvaluation result{0.0, Gradients::zeros_like(net)};
  const Eigen::MatrixXd err = trace.v[m] - data.targets;
  result.error = err.squaredNorm() / (2.0 * n);

  // Output error term.
  const Layer& out_layer = net.layers[m - 1];
  Eigen::MatrixXd delta(err.rows(), err.cols());
  switch (out_layer.activation) {
    case Activation::implicit:
      for (Eigen::Index j = 0; j < err.cols(); ++j) {
        const ActivationParams params = net.activation_params(m - 1, j);
        double p_sum = 0.0;
        for (Eigen::Index d = 0; d < err.rows(); ++d) {
          const ActivationDerivatives dv = derivatives(trace.v[m](d, j), params);
          delta(d, j) = err(d, j) * dv.dv_da;
          p_sum += err(d, j) * dv.dv_dp;
        }
        result.gradient.p[m - 1][j] = p_sum;
      }
      break;
    case Activation::softmax:
      delta = err.array() * trace.v[m].array() * (1.0 - trace.v[m].array());
      break;
    default:
      delta = err.array() *
              trace.a[m - 1].unaryExpr([kind = out_layer.activation](double x) { return fixed_deriv(kind, x); }).array();
      break;
  }

  Eigen::MatrixXd back;
  for (std::size_t k = m; k-- > 0;) {
    const Layer& layer = net.layers[k];
    Eigen::MatrixXd& grad_w = result.gradient.weights[k];
    grad_w.col(0) = delta.colwise().sum().transpose();
    grad_w.rightCols(layer.fan_in()).noalias() = delta.transpose() * trace.v[k];
    if (k == 0) break;

    back.noalias() = delta * layer.weights.rightCols(layer.fan_in());
    const Layer& below = net.layers[k - 1];
    const Eigen::MatrixXd& v_below = trace.v[k];
    delta.resize(back.rows(), back.cols());
    if (below.activation == Activation::implicit) {
      for (Eigen::Index j = 0; j < back.cols(); ++j) {
        const ActivationParams params = net.activation_params(k - 1, j);
        double p_sum = 0.0;
        for (Eigen::Index d = 0; d < back.rows(); ++d) {
          const ActivationDerivatives dv = derivatives(v_below(d, j), params);
          p_sum += dv.dv_dp * back(d, j);
          delta(d, j) = dv.dv_da * back(d, j);
        }
        result.gradient.p[k - 1][j] = p_sum;
      }
    } else {
      delta = back.array() *
              trace.a[k - 1].unaryExpr([kind = below.activation](double x) { return fixed_deriv(kind, x); }).array();
    }
  }
  result.gradient *= 1.0 / n;
  return result;
}

double dataset_error(const Network& net, const Dataset& data) {
  check_compatible(net, data);
  validate(net);
  BatchTrace trace;
  forward_batch(net, data, trace);
  const Eigen::MatrixXd err = trace.v.back() - data.targets;
  return err.squaredNorm() / (2.0 * static_cast<double>(data.size()));
}

double classification_error(const Network& net, const Dataset& data) {
  check_compatible(net, data);
  if (data.task != Task::classification) throw InputError("classification_error: needs a classification dataset");
  ForwardTrace trace;
  Eigen::Index wrong = 0;
  for (Eigen::Index d = 0; d < data.size(); ++d) {
    forward(net, data.inputs.row(d).transpose(), trace);
    Eigen::Index predicted = 0;
    trace.output().maxCoeff(&predicted);
    if (predicted != data.label(d)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

Eigen::VectorXd flatten_p(const Network& net) {
  Eigen::VectorXd all(net.p_count());
  Eigen::Index offset = 0;
  for (const auto& layer : net.layers) {
    all.segment(offset, layer.p.size()) = layer.p;
    offset += layer.p.size();
  }
  return all;
}

namespace {

void apply_step(Network& net, const Gradients& grad, const TrainConfig& cfg) {
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    Layer& layer = net.layers[k];
    layer.weights -= cfg.alpha_w * grad.weights[k];
    if (cfg.alpha_p != 0.0 && layer.p.size()) {
      layer.p -= cfg.alpha_p * grad.p[k];
      layer.p = layer.p.unaryExpr([](double p) { return std::isnan(p) ? p : clamp_p(p); });
    }
  }
}

}  // namespace

TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg) {
  validate(cfg);
  validate(data);
  net.inner_iters = cfg.inner_iters;
  validate(net);
  check_compatible(net, data);

  TrainLog log;
  log.error.reserve(cfg.max_iters);
  for (int t = 1; t <= cfg.max_iters; ++t) {
    const BatchEvaluation eval = evaluate_batch(net, data);
    if (!std::isfinite(eval.error)) {
      throw DivergenceError("training error became non-finite at iteration " + std::to_string(t));
    }
    log.error.push_back(eval.error);
    log.p.push_back(flatten_p(net));
    if (cfg.max_error > 0.0 && eval.error < cfg.max_error) break;
    if (cfg.max_gradient > 0.0 && eval.gradient.max_abs() < cfg.max_gradient) break;
    if (t == cfg.max_iters) break;

    apply_step(net, eval.gradient, cfg);
  }
  return {std::move(net), std::move(log)};
}

}  // namespace pnet
