#pragma once

// Fixed-activation feedforward network used as the comparison baseline. It is a
// pnet::Network whose layers carry satlins / tansig / purelin / softmax instead
// of the implicit activation, and it is trained by the same loop in training.hpp
// (layers without p values simply receive no p gradient).

#include <cstdint>
#include <span>

#include "pnet/network.hpp"

namespace pnet {

/// satlins: clamp(a, -1, 1); tansig: 2 / (1 + e^(-2a)) - 1; purelin: a.
/// Throws InputError for `implicit` and `softmax`, which are not elementwise.
double fixed_eval(Activation kind, double a);

/// Derivative of fixed_eval. satlins' is 1 on (-1, 1) and 0 elsewhere, including |a| = 1.
double fixed_deriv(Activation kind, double a);

/// Nguyen-Widrow magnitude 0.7 * fan_out^(1 / fan_in).
double nguyen_widrow_beta(int fan_in, int fan_out);

/// Per layer: rows drawn uniform in [-1, 1] and rescaled to norm beta, biases
/// beta * linspace(-1, 1, fan_out) * sign(first weight). Hidden layers use
/// `hidden`; the output layer uses `output`, or softmax for a classification head.
Network nguyen_widrow_init(std::span<const int> layer_sizes, Task head, Activation hidden, Activation output,
                           std::uint64_t seed);

}  // namespace pnet
