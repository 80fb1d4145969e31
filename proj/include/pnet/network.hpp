#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pnet/activation.hpp"

namespace pnet {

/// Output head. A classification head ends in a softmax layer without p values.
enum class Task { regression, classification };

enum class Activation {
  implicit,  ///< the trainable implicit activation f(a; p)
  satlins,
  tansig,
  purelin,
  softmax,   ///< output layer only
};

std::string_view to_string(Task task);
std::string_view to_string(Activation kind);
Task parse_task(std::string_view text);
Activation parse_activation(std::string_view text);

struct Layer {
  /// size() x (fan_in() + 1); column 0 holds the biases.
  Eigen::MatrixXd weights;
  /// Shape parameter per neuron; empty unless `activation == implicit`.
  Eigen::VectorXd p;
  Activation activation = Activation::implicit;

  Eigen::Index size() const { return weights.rows(); }
  Eigen::Index fan_in() const { return weights.cols() - 1; }
};

/// Fully connected feedforward network. Layer 0 is the raw input and owns no
/// neurons, so `layers[k-1]` is layer k of an m-layer network.
///
/// A p-network uses `Activation::implicit` on every layer except a softmax
/// output; the baseline network uses the fixed kinds. Both share one lambda and
/// one inner iteration count for the implicit activations.
struct Network {
  int input_dim = 0;
  std::vector<Layer> layers;
  double lambda = 1.0;
  int inner_iters = 100;
  Task head = Task::regression;

  std::vector<int> layer_sizes() const;
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().size()); }
  ActivationParams activation_params(std::size_t layer, Eigen::Index neuron) const {
    return {layers[layer].p[neuron], lambda, inner_iters, IterationScheme::accelerated};
  }
  /// Number of p values across all layers.
  Eigen::Index p_count() const;
};

/// Throws DimensionError / InputError when shapes, p bounds or head layout are inconsistent.
void validate(const Network& net);

struct ForwardTrace {
  /// a^k for k = 1..m, stored at index k-1.
  std::vector<Eigen::VectorXd> activations;
  /// v^k for k = 0..m; outputs[0] is the input x.
  std::vector<Eigen::VectorXd> outputs;

  const Eigen::VectorXd& output() const { return outputs.back(); }

  /// threshold_input per implicit neuron, valid for the p values and lambda
  /// recorded next to it. Refreshed by forward() when the network changes.
  std::vector<Eigen::VectorXd> thresholds;
  std::vector<Eigen::VectorXd> threshold_p;
  double threshold_lambda = -1.0;
};

/// Standard-normal weights and biases; every p set to `initial_p`, except the
/// output layer which takes `output_p` when given. A classification head gets a
/// softmax output layer.
Network init_network(std::span<const int> layer_sizes, Task head, double lambda, double initial_p,
                     std::uint64_t seed, std::optional<double> output_p = std::nullopt);

ForwardTrace forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Same as above, reusing the storage in `trace`.
void forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x, ForwardTrace& trace);
Eigen::VectorXd predict(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Max-shifted softmax.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

// Text model format, one record per line, comma separated:
//   pnet-model,1
//   input_dim,<r0>
//   head,<regression|classification>
//   lambda,<value>
//   inner_iters,<n>
//   layer,<k>,<activation>,<rows>,<cols>
//   weights,<k>,<row-major values>
//   p,<k>,<values>            (implicit layers only)
// Reals are written with 17 significant digits, so a save/load cycle is exact.
void save_network(const Network& net, std::ostream& out);
Network load_network(std::istream& in);
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace pnet
