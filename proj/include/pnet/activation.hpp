#pragma once

// Implicit parametric activation v = f(a; p), defined as the root in v of
//
//   R(a, v; p) = lambda * p * |v|^(p-1) * sign(v) + (v - a) = 0,
//
// the consensus-variable update of an L_p^p-regularized ADMM problem with the
// penalty constants folded into lambda. For p = 2 the root is explicit,
// v = a / (1 + 2 lambda); otherwise it is found by reweighted fixed-point
// iteration with one of two maps, chosen per input by the slope-0.5 threshold.

namespace pnet {

inline constexpr double kMinP = 1.01;
inline constexpr double kMaxP = 1.0e4;
/// Stand-in for |v| = 0 in the method-1 map when p < 2.
inline constexpr double kMagnitudeFloor = 1e-12;
/// Early exit on successive iterates.
inline constexpr double kIterateTolerance = 1e-12;

enum class IterationScheme {
  /// Aitken-extrapolated (Steffensen) iteration of the selected map. Each
  /// inner iteration applies the map twice and extrapolates; the candidate is
  /// discarded in favour of the second map value when it is non-finite or
  /// leaves [0, |a|].
  accelerated,
  /// Plain substitution v <- map(v).
  plain,
};

struct ActivationParams {
  double p = 2.0;
  double lambda = 1.0;
  int inner_iters = 100;
  IterationScheme scheme = IterationScheme::accelerated;
};

/// Throws InputError unless p in [kMinP, kMaxP], lambda >= 0 and inner_iters >= 1.
void validate(const ActivationParams& params);

/// Projects p onto [kMinP, kMaxP].
double clamp_p(double p);

double residual(double a, double v, const ActivationParams& params);

/// Closed form for p = 2.
double eval_p2(double a, double lambda);

/// v = a / (1 + lambda p |v_prev|^(p-2)). Converges for p < 2 and, for p > 2,
/// below the threshold input.
double method1_step(double a, double v_prev, const ActivationParams& params);

/// v = (|a - v_prev| / (lambda p))^(1/(p-1)) sign(a). Used for p > 2 at or
/// above the threshold input.
double method2_step(double a, double v_prev, const ActivationParams& params);

/// Positive input a_tau at which dv/da = 1/2. Requires p > 2 and lambda > 0;
/// may be +inf when lambda is tiny and p is close to 2.
double threshold_input(const ActivationParams& params);

/// f(a; p). Odd and non-decreasing in a, |f(a)| <= |a|.
double evaluate(double a, const ActivationParams& params);
/// Same as evaluate(a, params), with threshold_input(params) precomputed by the
/// caller. `threshold` is only read when p > 2 and lambda > 0.
double evaluate(double a, const ActivationParams& params, double threshold);

/// Partial derivative of f with respect to a, expressed through the output v.
double dv_da(double v, const ActivationParams& params);

/// Partial derivative of f with respect to p, expressed through the output v.
double dv_dp(double v, const ActivationParams& params);

struct ActivationDerivatives {
  double dv_da = 0.0;
  double dv_dp = 0.0;
};
/// Both partial derivatives at once; identical to calling dv_da and dv_dp.
ActivationDerivatives derivatives(double v, const ActivationParams& params);

}  // namespace pnet
