#include "pnet/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "pnet/errors.hpp"
#include "pnet/random.hpp"

namespace pnet {

double fixed_eval(Activation kind, double a) {
  switch (kind) {
    case Activation::satlins:
      return std::clamp(a, -1.0, 1.0);
    case Activation::tansig:
      return 2.0 / (1.0 + std::exp(-2.0 * a)) - 1.0;
    case Activation::purelin:
      return a;
    default:
      throw InputError("fixed_eval: not an elementwise fixed activation");
  }
}

double fixed_deriv(Activation kind, double a) {
  switch (kind) {
    case Activation::satlins:
      return (a > -1.0 && a < 1.0) ? 1.0 : 0.0;
    case Activation::tansig: {
      const double t = fixed_eval(Activation::tansig, a);
      return 1.0 - t * t;
    }
    case Activation::purelin:
      return 1.0;
    default:
      throw InputError("fixed_deriv: not an elementwise fixed activation");
  }
}

double nguyen_widrow_beta(int fan_in, int fan_out) {
  return 0.7 * std::pow(static_cast<double>(fan_out), 1.0 / static_cast<double>(fan_in));
}

Network nguyen_widrow_init(std::span<const int> layer_sizes, Task head, Activation hidden, Activation output,
                           std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw InputError("nguyen_widrow_init: need input size and at least one layer");
  for (int size : layer_sizes) {
    if (size < 1) throw InputError("nguyen_widrow_init: layer sizes must be positive");
  }
  if (hidden == Activation::implicit || hidden == Activation::softmax) {
    throw InputError("nguyen_widrow_init: hidden activation must be satlins, tansig or purelin");
  }
  if (head == Task::classification) output = Activation::softmax;
  if (output == Activation::implicit) throw InputError("nguyen_widrow_init: output activation cannot be implicit");

  Rng rng(seed);
  Network net;
  net.input_dim = layer_sizes[0];
  net.head = head;
  net.lambda = 0.0;
  const std::size_t m = layer_sizes.size() - 1;
  for (std::size_t k = 1; k <= m; ++k) {
    const int fan_in = layer_sizes[k - 1];
    const int fan_out = layer_sizes[k];
    const double beta = nguyen_widrow_beta(fan_in, fan_out);
    Layer layer;
    layer.activation = (k == m) ? output : hidden;
    layer.weights.resize(fan_out, fan_in + 1);
    for (int j = 0; j < fan_out; ++j) {
      auto row = layer.weights.row(j).tail(fan_in);
      do {
        for (int i = 0; i < fan_in; ++i) row[i] = rng.uniform(-1.0, 1.0);
      } while (row.norm() == 0.0);
      row *= beta / row.norm();
      const double spread = fan_out == 1 ? 0.0 : -1.0 + 2.0 * j / (fan_out - 1);
      const double direction = row[0] < 0.0 ? -1.0 : 1.0;
      layer.weights(j, 0) = beta * spread * direction;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace pnet
