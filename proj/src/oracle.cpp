#include "pnet/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "pnet/errors.hpp"

namespace pnet {

double bisect(const std::function<double(double)>& f, const BracketingInterval& bracket) {
  if (!(bracket.tol >= 1e-14) && bracket.tol != 0.0) throw InputError("bisect: tol must be >= 1e-14 or exactly 0");
  double lo = bracket.lo;
  double hi = bracket.hi;
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) throw BracketError("bisect: residual does not change sign over the bracket");
  double mid = 0.5 * (lo + hi);
  for (int step = 0; step < bracket.max_steps; ++step) {
    mid = lo + 0.5 * (hi - lo);
    if (mid <= std::min(lo, hi) || mid >= std::max(lo, hi)) break;
    const double f_mid = f(mid);
    if (std::abs(f_mid) <= bracket.tol) break;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

double bisect_activation(double a, const ActivationParams& params, double tol) {
  validate(params);
  if (!std::isfinite(a)) throw InputError("bisect_activation: non-finite input");
  if (a == 0.0) return 0.0;
  const double magnitude = std::abs(a);
  ActivationParams positive = params;
  const double root = bisect([&](double v) { return residual(magnitude, v, positive); },
                             {0.0, magnitude, tol, 4000});
  return std::copysign(root, a);
}

SplitRoot bisect_activation_split(double a, const ActivationParams& params) {
  // Differencing over p may step just below kMinP, so only the mathematical domain is enforced.
  if (!(params.p > 1.0) || !(params.lambda >= 0.0)) throw InputError("bisect_activation_split: needs p > 1, lambda >= 0");
  if (!std::isfinite(a)) throw InputError("bisect_activation_split: non-finite input");
  if (a == 0.0) return {};
  const double magnitude = std::abs(a);
  const double half = 0.5 * magnitude;
  const double sgn = a > 0.0 ? 1.0 : -1.0;
  SplitRoot out;
  if (residual(magnitude, half, params) >= 0.0) {
    // Root in [0, |a|/2]: solve for v.
    const double v = bisect([&](double x) { return residual(magnitude, x, params); }, {0.0, half, 0.0, 4000});
    out.v = sgn * v;
    out.shrink = sgn * (magnitude - v);
  } else {
    // Root in (|a|/2, |a|]: solve for s = |a| - v, where lambda p (|a| - s)^(p-1) = s.
    const double lp = params.lambda * params.p;
    const double s = bisect([&](double x) { return lp * std::pow(magnitude - x, params.p - 1.0) - x; },
                            {0.0, half, 0.0, 4000});
    out.shrink = sgn * s;
    out.v = sgn * (magnitude - s);
    out.solved_shrink = true;
  }
  return out;
}

double finite_diff(const std::function<double(double)>& f, double x, double h) {
  if (!(h > 0.0)) throw InputError("finite_diff: h must be > 0");
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double finite_diff(const std::function<double(double)>& f, double x) {
  return finite_diff(f, x, std::max(1e-6, 1e-6 * std::abs(x)));
}

namespace {

// Differences whichever part of the split root was solved directly at the base point.
double split_derivative(const std::function<SplitRoot(double)>& solve, double x, double h, bool shrink_is_input) {
  const SplitRoot base = solve(x);
  const SplitRoot up = solve(x + h);
  const SplitRoot down = solve(x - h);
  if (!base.solved_shrink) return (up.v - down.v) / (2.0 * h);
  const double ds = (up.shrink - down.shrink) / (2.0 * h);
  // v = a - s, so dv/da = 1 - ds/da while dv/dp = -ds/dp.
  return shrink_is_input ? 1.0 - ds : -ds;
}

}  // namespace

double fd_dv_da(double a, const ActivationParams& params) {
  const double h = std::max(1e-6, 1e-6 * std::abs(a));
  return split_derivative([&](double x) { return bisect_activation_split(x, params); }, a, h, true);
}

double fd_dv_dp(double a, const ActivationParams& params) {
  const double h = std::max(1e-6, 1e-6 * std::abs(params.p));
  return split_derivative(
      [&](double p) {
        ActivationParams shifted = params;
        shifted.p = p;
        return bisect_activation_split(a, shifted);
      },
      params.p, h, false);
}

GradientCheckReport check_network_gradients(const Network& net, const Dataset& batch, double h,
                                            const GradientProvider& analytic) {
  validate(net);
  validate(batch);
  if (batch.feature_dim() != net.input_dim || batch.target_dim() != net.output_dim()) {
    throw DimensionError("check_network_gradients: batch does not match the network");
  }
  if (!(h > 0.0)) throw InputError("check_network_gradients: h must be > 0");

  const Gradients grad = analytic ? analytic(net, batch) : evaluate_batch(net, batch).gradient;
  const auto n = static_cast<double>(batch.size());

  std::function<double(const Network&)> objective;
  if (net.head == Task::regression) {
    objective = [&batch](const Network& candidate) { return dataset_error(candidate, batch); };
  } else {
    RowMatrix frozen_delta(batch.size(), net.output_dim());
    for (Eigen::Index d = 0; d < batch.size(); ++d) {
      const Eigen::VectorXd y_hat = predict(net, batch.inputs.row(d).transpose());
      const Eigen::VectorXd y = batch.targets.row(d).transpose();
      frozen_delta.row(d) = ((y_hat - y).array() * y_hat.array() * (1.0 - y_hat.array())).matrix().transpose();
    }
    objective = [&batch, frozen_delta, n](const Network& candidate) {
      double total = 0.0;
      ForwardTrace trace;
      for (Eigen::Index d = 0; d < batch.size(); ++d) {
        forward(candidate, batch.inputs.row(d).transpose(), trace);
        total += frozen_delta.row(d).dot(trace.activations.back());
      }
      return total / n;
    };
  }

  auto rel_error = [](double analytic_value, double numeric) {
    const double denom = std::max({std::abs(analytic_value), std::abs(numeric), 1e-8});
    return std::abs(analytic_value - numeric) / denom;
  };

  GradientCheckReport report;
  Network work = net;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    Eigen::MatrixXd& w = work.layers[k].weights;
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      for (Eigen::Index i = 0; i < w.cols(); ++i) {
        const double original = w(j, i);
        const double step = h * std::max(1.0, std::abs(original));
        w(j, i) = original + step;
        const double up = objective(work);
        w(j, i) = original - step;
        const double down = objective(work);
        w(j, i) = original;
        const double numeric = (up - down) / (2.0 * step);
        report.max_rel_weights = std::max(report.max_rel_weights, rel_error(grad.weights[k](j, i), numeric));
        ++report.weight_count;
      }
    }
    Eigen::VectorXd& p = work.layers[k].p;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double original = p[j];
      const double step = h * std::max(1.0, std::abs(original));
      p[j] = original + step;
      const double up = objective(work);
      p[j] = original - step;
      const double down = objective(work);
      p[j] = original;
      const double numeric = (up - down) / (2.0 * step);
      report.max_rel_p = std::max(report.max_rel_p, rel_error(grad.p[k][j], numeric));
      ++report.p_count;
    }
  }
  return report;
}

}  // namespace pnet
