#include "pnet/activation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pnet/errors.hpp"

namespace pnet {
namespace {

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

// Aitken delta-squared on three successive iterates. Returns `second` when the
// extrapolation is undefined or leaves the interval that must hold the root.
double extrapolate(double a, double v0, double v1, double v2) {
  const double denom = v2 - 2.0 * v1 + v0;
  if (denom == 0.0) return v2;
  const double diff = v1 - v0;
  const double candidate = v0 - diff * diff / denom;
  const double signed_candidate = candidate * sign(a);
  if (!std::isfinite(candidate) || signed_candidate < 0.0 || signed_candidate > std::abs(a)) {
    return v2;
  }
  return candidate;
}

template <class Step>
double iterate(double a, const ActivationParams& params, Step step, double v) {
  for (int it = 0; it < params.inner_iters; ++it) {
    double next = step(a, v, params);
    if (params.scheme == IterationScheme::accelerated && std::abs(next - v) > kIterateTolerance) {
      next = extrapolate(a, v, next, step(a, next, params));
    }
    const bool done = std::abs(next - v) <= kIterateTolerance;
    v = next;
    if (done) break;
  }
  return v;
}

}  // namespace

void validate(const ActivationParams& params) {
  if (!(params.p >= kMinP && params.p <= kMaxP)) {
    throw InputError("activation: p = " + std::to_string(params.p) + " outside [1.01, 1e4]");
  }
  if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda)) {
    throw InputError("activation: lambda must be finite and >= 0");
  }
  if (params.inner_iters < 1) throw InputError("activation: inner_iters must be >= 1");
}

double clamp_p(double p) { return std::clamp(p, kMinP, kMaxP); }

double residual(double a, double v, const ActivationParams& params) {
  const double p = params.p;
  return params.lambda * p * std::pow(std::abs(v), p - 1.0) * sign(v) + (v - a);
}

double eval_p2(double a, double lambda) { return a / (1.0 + 2.0 * lambda); }

double method1_step(double a, double v_prev, const ActivationParams& params) {
  const double p = params.p;
  double magnitude = std::abs(v_prev);
  if (p < 2.0 && magnitude < kMagnitudeFloor) {
    if (a == 0.0) return 0.0;
    magnitude = kMagnitudeFloor;
  }
  return a / (1.0 + params.lambda * p * std::pow(magnitude, p - 2.0));
}

double method2_step(double a, double v_prev, const ActivationParams& params) {
  const double p = params.p;
  return std::pow(std::abs(a - v_prev) / (params.lambda * p), 1.0 / (p - 1.0)) * sign(a);
}

double threshold_input(const ActivationParams& params) {
  const double p = params.p;
  if (!(p > 2.0)) throw InputError("threshold_input: requires p > 2");
  if (!(params.lambda > 0.0)) throw InputError("threshold_input: requires lambda > 0");
  const double v_tau = std::pow(1.0 / (params.lambda * p * (p - 1.0)), 1.0 / (p - 2.0));
  return v_tau * (1.0 + 1.0 / (p - 1.0));
}

double evaluate(double a, const ActivationParams& params, double threshold) {
  if (!std::isfinite(a)) throw InputError("activation: non-finite input");
  validate(params);
  if (params.lambda == 0.0) return a;
  if (params.p == 2.0) return eval_p2(a, params.lambda);
  if (a == 0.0) return 0.0;
  if (params.p > 2.0 && std::abs(a) >= threshold) {
    return iterate(a, params, method2_step, a);
  }
  const double v = iterate(a, params, method1_step, a);
  if (params.p > 2.0) return v;
  // For p near 1 and small |a| the root can lie far below the magnitude floor,
  // where method 1 stalls; method 2 contracts there and reaches it directly.
  if (std::abs(v) >= (params.p - 1.0) * (std::abs(a) - std::abs(v))) return v;
  const double polished = iterate(a, params, method2_step, v);
  return std::abs(residual(a, polished, params)) < std::abs(residual(a, v, params)) ? polished : v;
}

double evaluate(double a, const ActivationParams& params) {
  const bool has_threshold = params.p > 2.0 && params.lambda > 0.0;
  return evaluate(a, params, has_threshold ? threshold_input(params) : 0.0);
}

ActivationDerivatives derivatives(double v, const ActivationParams& params) {
  const double p = params.p;
  const double magnitude = std::abs(v);
  if (magnitude == 0.0 && p < 2.0) return {0.0, 0.0};
  const double power = std::pow(magnitude, p - 2.0);
  if (!std::isfinite(power)) return {0.0, 0.0};
  const double denom = params.lambda * p * (p - 1.0) * power + 1.0;
  ActivationDerivatives out;
  out.dv_da = 1.0 / denom;
  if (magnitude > 0.0) {
    const double numer = params.lambda * power * magnitude * sign(v) * (1.0 + p * std::log(magnitude));
    out.dv_dp = -numer / denom;
  }
  return out;
}

double dv_da(double v, const ActivationParams& params) { return derivatives(v, params).dv_da; }

double dv_dp(double v, const ActivationParams& params) { return derivatives(v, params).dv_dp; }

}  // namespace pnet
