#pragma once

// Reference computations kept independent of the fixed-point evaluation path:
// bisection roots of the activation residual and central finite differences.

#include <functional>

#include "pnet/activation.hpp"
#include "pnet/data.hpp"
#include "pnet/network.hpp"
#include "pnet/training.hpp"

namespace pnet {

struct BracketingInterval {
  double lo = 0.0;
  double hi = 0.0;
  double tol = 1e-14;   ///< stop once |residual| <= tol
  int max_steps = 2000;
};

/// Bisection on a function whose sign differs at the bracket ends. Stops on
/// |f| <= tol, when the midpoint is no longer representable between the ends,
/// or after max_steps halvings. Throws BracketError without a sign change.
double bisect(const std::function<double(double)>& f, const BracketingInterval& bracket);

/// Root of residual(a, ., params) on [0, a] (mirrored for a < 0); 0 for a = 0.
double bisect_activation(double a, const ActivationParams& params, double tol = 1e-14);

/// The activation root written as v + shrink = a. Whichever of the two has the
/// smaller magnitude is solved for directly by bisection to floating-point
/// convergence; the other is a minus it. Differences of the directly solved
/// part keep full relative precision, which finite differences need when
/// lambda is tiny (v within 1e-10 of a) or the input is strongly shrunk.
struct SplitRoot {
  double v = 0.0;
  double shrink = 0.0;
  bool solved_shrink = false;  ///< true when `shrink` was the bisected quantity
};
SplitRoot bisect_activation_split(double a, const ActivationParams& params);

/// (f(x + h) - f(x - h)) / (2h).
double finite_diff(const std::function<double(double)>& f, double x, double h);
/// Step max(1e-6, 1e-6 |x|).
double finite_diff(const std::function<double(double)>& f, double x);

/// dv/da and dv/dp from central differences of bisection roots (see SplitRoot).
double fd_dv_da(double a, const ActivationParams& params);
double fd_dv_dp(double a, const ActivationParams& params);

struct GradientCheckReport {
  double max_rel_weights = 0.0;
  double max_rel_p = 0.0;
  Eigen::Index weight_count = 0;
  Eigen::Index p_count = 0;
};

/// Analytic gradient source; defaults to evaluate_batch(...).gradient.
using GradientProvider = std::function<Gradients(const Network&, const Dataset&)>;

/// Compares analytic gradients with central differences, parameter by
/// parameter, with step h * max(1, |theta|) and relative error
/// |g - n| / max(|g|, |n|, 1e-8).
///
/// Regression heads are differenced on E itself. For a classification head the
/// analytic path injects (yhat - y) yhat (1 - yhat) at the softmax logits, which
/// is not the exact gradient of E through the softmax. The differenced quantity is
/// then S(theta) = 1/N sum_d <delta_d, a^m_d(theta)> with delta_d frozen at the
/// unperturbed network, whose exact gradient is what backpropagation of that
/// injected signal computes.
GradientCheckReport check_network_gradients(const Network& net, const Dataset& batch, double h = 1e-6,
                                            const GradientProvider& analytic = {});

}  // namespace pnet
