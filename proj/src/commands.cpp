#include "pnet/commands.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include "pnet/baseline.hpp"
#include "pnet/errors.hpp"
#include "pnet/random.hpp"
#include "pnet/training.hpp"

namespace pnet {

void write_shape_csv(std::span<const double> p_values, double lambda, double a_min, double a_max, int n_points,
                     int inner_iters, std::ostream& out) {
  if (n_points < 2 || !(a_min < a_max)) throw InputError("shape: need n_points >= 2 and a_min < a_max");
  out << std::setprecision(17) << "p,a,v,dv_da\n";
  for (double p : p_values) {
    const ActivationParams params{p, lambda, inner_iters, IterationScheme::accelerated};
    validate(params);
    for (int i = 0; i < n_points; ++i) {
      // Integer offsets from the centre keep mirrored grid points exact negatives.
      const double offset = static_cast<double>(2 * i - (n_points - 1)) / (2.0 * (n_points - 1));
      const double a = 0.5 * (a_min + a_max) + (a_max - a_min) * offset;
      const double v = evaluate(a, params);
      out << p << ',' << a << ',' << v << ',' << dv_da(v, params) << '\n';
    }
  }
}

Network gradcheck_network(const GradcheckSpec& spec) {
  Network net = init_network(spec.layers, spec.head, spec.lambda, spec.p_lo, spec.seed);
  Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& layer : net.layers) {
    for (double& p : layer.p) p = spec.p_lo == spec.p_hi ? spec.p_lo : rng.uniform(spec.p_lo, spec.p_hi);
  }
  net.inner_iters = spec.inner_iters;
  validate(net);
  return net;
}

Dataset gradcheck_batch(const GradcheckSpec& spec) {
  if (spec.samples < 1) throw InputError("gradcheck: need at least one sample");
  Rng rng(spec.seed + 1);
  Dataset batch;
  batch.task = spec.head;
  const int in = spec.layers.front();
  const int out = spec.layers.back();
  batch.inputs.resize(spec.samples, in);
  batch.targets = RowMatrix::Zero(spec.samples, out);
  for (int d = 0; d < spec.samples; ++d) {
    for (int i = 0; i < in; ++i) batch.inputs(d, i) = rng.normal();
    if (spec.head == Task::regression) {
      for (int i = 0; i < out; ++i) batch.targets(d, i) = rng.normal();
    } else {
      batch.targets(d, static_cast<Eigen::Index>(rng.below(out))) = 1.0;
    }
  }
  return batch;
}

int run_gradcheck(const GradcheckSpec& spec, double tolerance, bool corrupt, std::ostream& out) {
  const Network net = gradcheck_network(spec);
  const Dataset batch = gradcheck_batch(spec);
  GradientProvider provider;
  if (corrupt) {
    provider = [](const Network& n, const Dataset& b) {
      Gradients g = evaluate_batch(n, b).gradient;
      g.weights.front()(0, 0) += 1e-2;
      return g;
    };
  }
  const auto report = check_network_gradients(net, batch, spec.h, provider);
  const bool weights_ok = report.max_rel_weights <= tolerance;
  const bool p_ok = report.max_rel_p <= tolerance;
  out << std::setprecision(6) << std::scientific;
  out << "class,count,max_rel_error,threshold,result\n";
  out << "weights," << report.weight_count << ',' << report.max_rel_weights << ',' << tolerance << ','
      << (weights_ok ? "pass" : "FAIL") << '\n';
  out << "p," << report.p_count << ',' << report.max_rel_p << ',' << tolerance << ',' << (p_ok ? "pass" : "FAIL")
      << '\n';
  return weights_ok && p_ok ? 0 : 1;
}

double train_model(const ExperimentConfig& cfg, const std::string& variant, const Dataset& data,
                   const std::filesystem::path& model_path) {
  Network initial;
  TrainConfig tc;
  if (variant == "feedforward") {
    initial = nguyen_widrow_init(cfg.layers, cfg.head, cfg.baseline_hidden, cfg.baseline_output, cfg.seed);
    tc = baseline_train_config(cfg);
  } else if (variant == "adaptive" || variant == "frozen") {
    initial = init_network(cfg.layers, cfg.head, cfg.lambda, cfg.initial_p, cfg.seed, cfg.initial_p_output);
    tc = pnet_train_config(cfg, variant == "adaptive");
  } else {
    throw InputError("unknown variant '" + variant + "'");
  }
  const auto result = train(std::move(initial), data, tc);
  save_network(result.net, model_path);
  std::ofstream log(model_path.string() + ".log.csv");
  if (!log) throw std::runtime_error("cannot write training log next to " + model_path.string());
  log << std::setprecision(17) << "iter,E\n";
  for (std::size_t t = 0; t < result.log.error.size(); ++t) log << t + 1 << ',' << result.log.error[t] << '\n';
  return result.log.error.back();
}

EvalReport eval_model(const Network& net, const Dataset& data) {
  EvalReport report;
  report.error = dataset_error(net, data);
  if (net.head == Task::classification) report.classification_error = classification_error(net, data);
  return report;
}

}  // namespace pnet
