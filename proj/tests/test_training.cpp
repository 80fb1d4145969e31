#include <doctest.h>

#include <array>
#include <cmath>

#include "pnet/errors.hpp"
#include "pnet/data.hpp"
#include "pnet/oracle.hpp"
#include "pnet/random.hpp"
#include "pnet/training.hpp"

using namespace pnet;

namespace {

Network single_neuron() {
  Network net;
  net.input_dim = 1;
  net.lambda = 1.0;
  Layer layer;
  layer.weights.resize(1, 2);
  layer.weights << 0.0, 1.0;
  layer.p = Eigen::VectorXd::Constant(1, 2.0);
  net.layers.push_back(layer);
  return net;
}

Dataset one_sample(double x, double y) {
  Dataset data;
  data.inputs = RowMatrix::Constant(1, 1, x);
  data.targets = RowMatrix::Constant(1, 1, y);
  return data;
}

Dataset random_batch(int n, int in, int out, Task task, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.task = task;
  data.inputs.resize(n, in);
  data.targets = RowMatrix::Zero(n, out);
  for (int d = 0; d < n; ++d) {
    for (int i = 0; i < in; ++i) data.inputs(d, i) = rng.normal();
    if (task == Task::classification) {
      data.targets(d, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(out)))) = 1.0;
    } else {
      for (int j = 0; j < out; ++j) data.targets(d, j) = rng.normal();
    }
  }
  return data;
}

}  // namespace

TEST_CASE("mse examples") {
  CHECK(mse(RowMatrix::Constant(1, 1, 1.0), RowMatrix::Zero(1, 1)) == 0.5);
  RowMatrix y(2, 1);
  y << 0.0, 2.0;
  CHECK(mse(y, y) == 0.0);
  RowMatrix y_hat(2, 1);
  y_hat << 1.0, 0.0;
  CHECK(mse(y_hat, y) == doctest::Approx(1.25).epsilon(1e-15));
  CHECK_THROWS_AS(mse(RowMatrix::Zero(2, 1), RowMatrix::Zero(3, 1)), DimensionError);
}

TEST_CASE("backprop on the single-neuron example") {
  const Network net = single_neuron();
  const ForwardTrace trace = forward(net, Eigen::VectorXd::Constant(1, 3.0));
  CHECK(trace.output()(0) == doctest::Approx(1.0).epsilon(1e-15));
  const Gradients g = backprop(net, trace, Eigen::VectorXd::Zero(1));
  CHECK(g.weights[0](0, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.weights[0](0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(g.p[0](0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));

  const GradientCheckReport report = check_network_gradients(net, one_sample(3.0, 0.0));
  CHECK(report.max_rel_weights <= 1e-6);
  CHECK(report.max_rel_p <= 1e-6);
}

TEST_CASE("one training step on the single-neuron example") {
  TrainConfig cfg;
  cfg.alpha_w = 0.1;
  cfg.alpha_p = 0.0;
  cfg.max_iters = 2;
  cfg.max_error = 0.0;
  const TrainResult result = train(single_neuron(), one_sample(3.0, 0.0), cfg);
  CHECK(result.net.layers[0].weights(0, 1) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(result.net.layers[0].weights(0, 0) == doctest::Approx(-0.1 / 3.0).epsilon(1e-14));
  REQUIRE(result.log.error.size() == 2);
  CHECK(result.log.error[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("zero error gives zero gradients") {
  const std::array sizes{2, 3, 2};
  const Network net = init_network(sizes, Task::regression, 1.0, 3.0, 3);
  const Eigen::Vector2d x(0.4, -0.9);
  const ForwardTrace trace = forward(net, x);
  const Gradients g = backprop(net, trace, trace.output());
  CHECK(g.max_abs() == 0.0);

  Network clf = init_network(sizes, Task::classification, 1.0, 3.0, 3);
  const ForwardTrace clf_trace = forward(clf, x);
  const Gradients clf_g = backprop(clf, clf_trace, clf_trace.output());
  CHECK(clf_g.max_abs() == 0.0);
}

TEST_CASE("batched evaluation matches per-sample backprop") {
  const std::array sizes{3, 4, 3, 2};
  for (Task head : {Task::regression, Task::classification}) {
    const Network net = init_network(sizes, head, 0.7, 3.3, 21);
    const Dataset data = random_batch(9, 3, 2, head, 5);
    const BatchEvaluation batched = evaluate_batch(net, data);

    Gradients summed = Gradients::zeros_like(net);
    double sum_sq = 0.0;
    for (Eigen::Index d = 0; d < data.size(); ++d) {
      const ForwardTrace trace = forward(net, data.inputs.row(d).transpose());
      sum_sq += (trace.output() - data.targets.row(d).transpose()).squaredNorm();
      backprop(net, trace, data.targets.row(d).transpose(), summed);
    }
    summed *= 1.0 / static_cast<double>(data.size());
    CHECK(batched.error == doctest::Approx(sum_sq / (2.0 * 9.0)).epsilon(1e-13));
    CHECK(dataset_error(net, data) == batched.error);
    for (std::size_t k = 0; k < sizes.size() - 1; ++k) {
      CHECK((batched.gradient.weights[k] - summed.weights[k]).cwiseAbs().maxCoeff() <= 1e-13);
      if (summed.p[k].size()) CHECK((batched.gradient.p[k] - summed.p[k]).cwiseAbs().maxCoeff() <= 1e-13);
    }
  }
}

TEST_CASE("frozen p training never changes p") {
  const std::array sizes{1, 4, 1};
  const Network net = init_network(sizes, Task::regression, 1.0, 3.0, 4);
  TrainConfig cfg;
  cfg.alpha_w = 0.05;
  cfg.alpha_p = 0.0;
  cfg.max_iters = 30;
  cfg.max_error = 0.0;
  const TrainResult result = train(net, gen_square(20, 1), cfg);
  for (std::size_t k = 0; k < net.layers.size(); ++k) CHECK(result.net.layers[k].p == net.layers[k].p);
  for (const auto& p : result.log.p) CHECK(p == flatten_p(net));
}

TEST_CASE("log length, stopping rules and final entry") {
  const std::array sizes{1, 4, 1};
  const Network net = init_network(sizes, Task::regression, 1.0, 3.0, 4);
  const Dataset data = gen_square(20, 1);
  TrainConfig cfg;
  cfg.alpha_w = 0.05;
  cfg.alpha_p = 1.0;
  cfg.max_iters = 25;
  cfg.max_error = 0.0;
  const TrainResult full = train(net, data, cfg);
  CHECK(full.log.error.size() == 25);
  CHECK(full.log.p.size() == 25);
  CHECK(full.log.error.back() == dataset_error(full.net, data));

  cfg.max_error = full.log.error[10];
  const TrainResult early = train(net, data, cfg);
  std::size_t first_below = 0;
  while (first_below < full.log.error.size() && !(full.log.error[first_below] < cfg.max_error)) ++first_below;
  CHECK(early.log.error.size() == std::min<std::size_t>(25, first_below + 1));

  cfg.max_error = 0.0;
  cfg.max_gradient = 1e6;
  CHECK(train(net, data, cfg).log.error.size() == 1);
}

TEST_CASE("p stays clamped") {
  const std::array sizes{1, 3, 1};
  const Network net = init_network(sizes, Task::regression, 1.0, 1.05, 2);
  TrainConfig cfg;
  cfg.alpha_w = 0.01;
  cfg.alpha_p = 1e4;
  cfg.max_iters = 40;
  cfg.max_error = 0.0;
  const TrainResult result = train(net, gen_abs(15, 3), cfg);
  for (const auto& p : result.log.p) {
    CHECK(p.minCoeff() >= kMinP);
    CHECK(p.maxCoeff() <= kMaxP);
  }
}

TEST_CASE("divergence is reported") {
  const std::array sizes{1, 3, 1};
  const Network net = init_network(sizes, Task::regression, 0.0, 2.0, 2);
  TrainConfig cfg;
  cfg.alpha_w = 1e6;
  cfg.max_iters = 200;
  cfg.max_error = 0.0;
  CHECK_THROWS_AS(train(net, gen_sign(20, -5, 5, 1), cfg), DivergenceError);
}

TEST_CASE("train validates its inputs") {
  const std::array sizes{1, 3, 1};
  const Network net = init_network(sizes, Task::regression, 1.0, 2.0, 2);
  TrainConfig cfg;
  cfg.alpha_w = 0.0;
  CHECK_THROWS_AS(train(net, gen_sign(5, -1, 1, 1), cfg), InputError);
  cfg = TrainConfig{};
  CHECK_THROWS_AS(train(net, gen_activity_standin(2, 1), cfg), DimensionError);
}

TEST_CASE("classification error") {
  const std::array sizes{2, 3};
  Network net = init_network(sizes, Task::classification, 1.0, 2.0, 1);
  for (Layer& layer : net.layers) layer.weights.setZero();
  Dataset data;
  data.task = Task::classification;
  data.inputs = RowMatrix::Zero(3, 2);
  data.targets = RowMatrix::Zero(3, 3);
  data.targets(0, 0) = 1.0;
  data.targets(1, 1) = 1.0;
  data.targets(2, 2) = 1.0;
  // Uniform outputs: argmax ties resolve to class 0.
  CHECK(classification_error(net, data) == doctest::Approx(2.0 / 3.0));

  net.layers[0].weights(1, 0) = 5.0;
  CHECK(classification_error(net, data) == doctest::Approx(2.0 / 3.0));
  data.targets.setZero();
  data.targets.col(1).setOnes();
  CHECK(classification_error(net, data) == 0.0);
  CHECK_THROWS_AS(classification_error(init_network(std::array{1, 1}, Task::regression, 1.0, 2.0, 1), gen_sign(3, -1, 1, 1)),
                  InputError);
}

TEST_CASE("small step decreases the error") {
  const std::array sizes{2, 3, 2};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Network net = init_network(sizes, Task::regression, 0.5, 3.0, seed);
    const Dataset data = random_batch(6, 2, 2, Task::regression, seed + 100);
    TrainConfig cfg;
    cfg.alpha_w = 1e-6;
    cfg.alpha_p = 1e-6;
    cfg.max_iters = 2;
    cfg.max_error = 0.0;
    const TrainResult result = train(net, data, cfg);
    CAPTURE(seed);
    CHECK(result.log.error[1] <= result.log.error[0] + 1e-12);
  }
}
