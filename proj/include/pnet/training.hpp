#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "pnet/data.hpp"
#include "pnet/network.hpp"

namespace pnet {

struct TrainConfig {
  double alpha_w = 0.1;   ///< step for weights and biases
  double alpha_p = 0.0;   ///< step for p; 0 freezes the activations
  int max_iters = 1000;
  double max_error = 1e-3;     ///< stop once E drops below this; 0 disables
  double max_gradient = 0.0;   ///< stop once max |dE/dtheta| drops below this; 0 disables
  int inner_iters = 100;       ///< fixed-point iterations per activation evaluation
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

/// Same layout as the network: one matrix per layer, one p vector per layer
/// (empty for layers without p).
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> p;

  static Gradients zeros_like(const Network& net);
  void set_zero();
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double scale);
  /// Largest absolute entry over weights and p.
  double max_abs() const;
};

/// E = 1/(2N) * sum_d |yhat_d - y_d|^2 over rows.
double mse(const Eigen::Ref<const RowMatrix>& outputs, const Eigen::Ref<const RowMatrix>& targets);

/// Single-sample gradients of 1/2 |yhat - y|^2, added into `grad`.
///
/// Output error term: regression (yhat - y) * df/da; classification
/// (yhat - y) * yhat * (1 - yhat), the diagonal softmax term. Hidden layers use
/// delta^k = f'(a^k) .* (W^{k+1}_{:,1:})^T delta^{k+1}. p gradients are
/// df/dp * (W^{k+1}_{:,1:})^T delta^{k+1} for hidden layers and
/// (yhat - y) * df/dp on a regression output.
void backprop(const Network& net, const ForwardTrace& trace, const Eigen::Ref<const Eigen::VectorXd>& target,
              Gradients& grad);
Gradients backprop(const Network& net, const ForwardTrace& trace, const Eigen::Ref<const Eigen::VectorXd>& target);

struct BatchEvaluation {
  double error = 0.0;   ///< E over the batch
  Gradients gradient;   ///< averaged over the batch
};

/// Forward and backward over every sample.
BatchEvaluation evaluate_batch(const Network& net, const Dataset& data);

/// E of the network on a dataset.
double dataset_error(const Network& net, const Dataset& data);

/// Fraction of rows with argmax(yhat) != argmax(y); ties go to the lowest index.
double classification_error(const Network& net, const Dataset& data);

struct TrainLog {
  /// E at the start of every iteration; the last entry is E of the returned network.
  std::vector<double> error;
  /// All p values (layer-major, neuron-minor) at the start of every iteration.
  std::vector<Eigen::VectorXd> p;
};

struct TrainResult {
  Network net;
  TrainLog log;
};

/// Full-batch gradient descent. Iteration t evaluates E and the averaged
/// gradient, logs them, stops when E < max_error, the gradient max-norm
/// < max_gradient, or t == max_iters, and otherwise updates every weight and p
/// from that single evaluation, then clamps p to [1.01, 1e4].
/// Throws DivergenceError when E becomes non-finite.
TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg);

/// Flattened p values in log order.
Eigen::VectorXd flatten_p(const Network& net);

}  // namespace pnet
