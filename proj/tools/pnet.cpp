// pnet: experiments, activation shape dumps, gradient checks and plain
// train/eval flows for p-networks.

#include <CLI11.hpp>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>

#include "pnet/commands.hpp"
#include "pnet/errors.hpp"
#include "pnet/experiment.hpp"

namespace {

std::filesystem::path default_out_dir(const std::string& name) {
  if (const char* env = std::getenv("PNET_OUT"); env && *env) return std::filesystem::path(env) / name;
  return std::filesystem::path("pnet_out") / name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-network experiments and tools"};
  app.require_subcommand(1);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run ex1, ex2a, ex2b or ex3 and write CSV artifacts");
  std::string exp_name;
  std::string exp_out;
  std::string exp_config;
  int exp_reps = 0;
  long long exp_seed = -1;
  int exp_threads = -1;
  std::vector<std::string> exp_sets;
  bool exp_quiet = false;
  experiment->add_option("name", exp_name, "ex1 | ex2a | ex2b | ex3")->required();
  experiment->add_option("--out", exp_out, "Output directory (default $PNET_OUT/<name> or pnet_out/<name>)");
  experiment->add_option("--config", exp_config, "JSON file overlaid on the preset");
  experiment->add_option("--repetitions", exp_reps, "Number of seeds / splits")->check(CLI::PositiveNumber);
  experiment->add_option("--seed", exp_seed, "First seed")->check(CLI::NonNegativeNumber);
  experiment->add_option("--threads", exp_threads, "Concurrent training runs (0 = all hardware threads)")
      ->check(CLI::NonNegativeNumber);
  experiment->add_option("--set", exp_sets, "Override a config key: key=value (repeatable)");
  experiment->add_flag("--quiet", exp_quiet, "No progress output");

  // shape
  auto* shape = app.add_subcommand("shape", "Tabulate v = f(a; p) and dv/da over a grid");
  std::vector<double> shape_p{1.01, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0};
  double shape_lambda = 1.0;
  double shape_min = -5.0;
  double shape_max = 5.0;
  int shape_points = 201;
  int shape_iters = 100;
  std::string shape_out;
  shape->add_option("--p", shape_p, "Shape values")->delimiter(',');
  shape->add_option("--lambda", shape_lambda);
  shape->add_option("--a-min", shape_min);
  shape->add_option("--a-max", shape_max);
  shape->add_option("--points", shape_points);
  shape->add_option("--inner-iters", shape_iters);
  shape->add_option("--out", shape_out, "CSV path (default stdout)");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backprop gradients with finite differences");
  pnet::GradcheckSpec spec;
  std::string gc_head = "regression";
  double gc_tol = 1e-3;
  bool gc_corrupt = false;
  gradcheck->add_option("--layers", spec.layers, "Layer sizes, input first")->delimiter(',');
  gradcheck->add_option("--head", gc_head, "regression | classification");
  gradcheck->add_option("--lambda", spec.lambda);
  gradcheck->add_option("--p-min", spec.p_lo);
  gradcheck->add_option("--p-max", spec.p_hi);
  gradcheck->add_option("--samples", spec.samples);
  gradcheck->add_option("--seed", spec.seed);
  gradcheck->add_option("--inner-iters", spec.inner_iters);
  gradcheck->add_option("--step", spec.h, "Finite-difference step scale");
  gradcheck->add_option("--tolerance", gc_tol);
  gradcheck->add_flag("--corrupt-gradient", gc_corrupt, "Perturb one analytic gradient (self-test)");

  // train
  auto* train = app.add_subcommand("train", "Train one network from a JSON config and a CSV dataset");
  std::string tr_config;
  std::string tr_data;
  std::string tr_model;
  std::string tr_variant = "adaptive";
  std::string tr_preset;
  train->add_option("--config", tr_config, "JSON config (flat keys)");
  train->add_option("--preset", tr_preset, "Start from ex1 | ex2a | ex2b | ex3");
  train->add_option("--data", tr_data, "Training CSV")->required();
  train->add_option("--model", tr_model, "Output model path")->required();
  train->add_option("--variant", tr_variant, "adaptive | frozen | feedforward");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on a CSV dataset");
  std::string ev_model;
  std::string ev_data;
  eval->add_option("--model", ev_model)->required();
  eval->add_option("--data", ev_data)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*experiment) {
      pnet::ExperimentConfig cfg = pnet::preset(exp_name);
      if (!exp_config.empty()) cfg = pnet::load_config(exp_config, cfg);
      for (const auto& s : exp_sets) cfg = pnet::apply_override(cfg, s);
      if (exp_reps > 0) cfg.repetitions = exp_reps;
      if (exp_seed >= 0) cfg.seed = static_cast<std::uint64_t>(exp_seed);
      if (exp_threads >= 0) cfg.threads = exp_threads;
      const auto out = exp_out.empty() ? default_out_dir(cfg.name) : std::filesystem::path(exp_out);
      const auto result = pnet::run_experiment(cfg, out, exp_quiet ? nullptr : &std::cerr);
      std::cout << std::setprecision(6);
      for (const auto& variant : cfg.variants) {
        std::cout << variant << ": mean train " << result.mean_train(variant) << ", mean test "
                  << result.mean_test(variant) << '\n';
      }
      std::cout << "artifacts in " << out.string() << '\n';
      return 0;
    }
    if (*shape) {
      if (shape_out.empty()) {
        pnet::write_shape_csv(shape_p, shape_lambda, shape_min, shape_max, shape_points, shape_iters, std::cout);
      } else {
        std::ofstream out(shape_out);
        if (!out) throw std::runtime_error("cannot write " + shape_out);
        pnet::write_shape_csv(shape_p, shape_lambda, shape_min, shape_max, shape_points, shape_iters, out);
      }
      return 0;
    }
    if (*gradcheck) {
      spec.head = pnet::parse_task(gc_head);
      return pnet::run_gradcheck(spec, gc_tol, gc_corrupt, std::cout);
    }
    if (*train) {
      pnet::ExperimentConfig cfg = tr_preset.empty() ? pnet::ExperimentConfig{} : pnet::preset(tr_preset);
      if (!tr_config.empty()) cfg = pnet::load_config(tr_config, cfg);
      const pnet::Dataset data = pnet::load_csv(std::filesystem::path(tr_data));
      cfg.layers.front() = static_cast<int>(data.feature_dim());
      cfg.head = data.task;
      const double final_error = pnet::train_model(cfg, tr_variant, data, tr_model);
      std::cout << std::setprecision(17) << "E=" << final_error << '\n';
      return 0;
    }
    if (*eval) {
      const pnet::Network net = pnet::load_network(std::filesystem::path(ev_model));
      const pnet::Dataset data = pnet::load_csv(std::filesystem::path(ev_data));
      const auto report = pnet::eval_model(net, data);
      std::cout << std::setprecision(17) << "E=" << report.error << '\n';
      if (report.classification_error >= 0.0) std::cout << "classification_error=" << report.classification_error << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "pnet: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
